"""
Result files: one CSV per table and an SVG plot for tables that declare one.

Files are named ``<experiment>-<table>.csv`` / ``.svg`` inside the run's
output directory. Floats are written with ``repr`` (shortest round-trip
decimal) so identical runs give byte-identical CSVs.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

SVG_RC = {
    'svg.hashsalt': 'breather-lab',
    'svg.fonttype': 'path',
}


@dataclass(frozen=True)
class Plot:
    kind: str  # 'line', 'points' or 'heatmap'
    x: str
    y: tuple[str, ...] = ()
    title: str = ''
    logx: bool = False
    logy: bool = False


@dataclass(frozen=True)
class Table:
    name: str
    header: tuple[str, ...]
    rows: list = field(default_factory=list)
    plot: Plot | None = None

    def column(self, label: str) -> np.ndarray:
        index = self.header.index(label)
        return np.array([_plottable(row[index]) for row in self.rows], dtype=float)


def _plottable(value):
    if value is None or value == '':
        return math.nan
    return float(value)


def format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, table: Table) -> Path:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\r\n')
        writer.writerow(table.header)
        for row in table.rows:
            writer.writerow([format_value(v) for v in row])
    logger.debug(f"Wrote {len(table.rows)} rows to {path}")
    return path


def write_svg(path: Path, table: Table) -> Path:
    import matplotlib
    import matplotlib.pyplot as plt

    plot = table.plot
    with matplotlib.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        if plot.kind == 'heatmap':
            cells = [label for label in table.header if label != plot.x]
            grid = np.array([[_plottable(row[table.header.index(c)]) for c in cells] for row in table.rows])
            times = table.column(plot.x)
            extent = (0.5, len(cells) + 0.5, times[0], times[-1]) if len(times) else None
            ax.imshow(grid, aspect='auto', origin='lower', interpolation='nearest',
                      cmap='Greys', vmin=0, vmax=1, extent=extent)
            ax.set_xlabel('cell')
            ax.set_ylabel(plot.x)
        else:
            x = table.column(plot.x)
            style = '-' if plot.kind == 'line' else 'o'
            for label in plot.y:
                ax.plot(x, table.column(label), style, label=label, markersize=3)
            ax.set_xlabel(plot.x)
            if plot.logx:
                ax.set_xscale('log')
            if plot.logy:
                ax.set_yscale('log')
            if len(plot.y) > 1:
                ax.legend(fontsize='small')
        if plot.title:
            ax.set_title(plot.title)
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)
    logger.debug(f"Wrote plot {path}")
    return path


def emit_outputs(record) -> list[Path]:
    """Write every table of ``record`` and store the paths on it.

    Raises OSError when the output directory cannot be written.
    """
    out_dir = Path(record.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = record.config.name
    written = []
    for table in record.tables:
        paths = [write_csv(out_dir / f'{name}-{table.name}.csv', table)]
        if table.plot is not None and table.rows:
            paths.append(write_svg(out_dir / f'{name}-{table.name}.svg', table))
        record.files[table.name] = tuple(paths)
        written.extend(paths)
    logger.info(f"Wrote {len(written)} files for '{name}' to {out_dir}")
    return written
