"""
Experiment orchestration: turn a validated ExperimentConfig into tables.

Each task builds a list of ``Table`` objects and a summary; ``run_experiment``
wraps them in a RunRecord and hands it to ``emit_outputs``. Sweep points are
independent and run either in-process or on a process pool; rows always come
back in sweep order.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings

from .config import ExperimentConfig
from .creutz import equivalence_trace, integrate_creutz, to_creutz
from .evolve import (
    Trajectory,
    averaged_observables,
    cell_profile,
    domain_extent,
    domain_onsets,
    extract_period,
    integrate,
    phase_heatmap,
)
from .exceptions import BlowUpError, ConfigError, DomainError, SingularTransformError
from .hermitian import hermitian_gamma_crit, integrate_reciprocal, plateau_metric
from .lattice import LatticeParams, single_site_state
from .outputs import Plot, Table, emit_outputs
from .spectral import (
    analytic_defect,
    analytic_defect_states,
    build_linear_model,
    defect_energy,
    defect_state_index,
    eigensolve,
    initial_overlaps,
    linear_period,
    propagate_linear,
    rabi_evolution,
    threshold_root_gamma0,
    threshold_root_gammas,
    weight_curve_gamma0,
    weight_curve_gammas,
)

logger = logging.getLogger(__name__)

TASKS = ('evolve', 'sweep', 'spectrum', 'defect', 'creutz-check', 'hermitian-compare')
TRAJECTORY_PLOT_CELLS = 4
RABI_SAMPLES = 1001
PERIOD_JUMP = 0.2


@dataclass
class RunRecord:
    config: ExperimentConfig
    task: str
    out_dir: Path
    tables: list[Table] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    duration: float = 0.0
    max_intensity: float | None = None
    blew_up: bool = False
    blow_up_time: float | None = None

    @property
    def outputs(self) -> dict:
        return self.files

    def flag_blow_up(self, failure: BlowUpError):
        self.blew_up = True
        if self.blow_up_time is None or failure.time < self.blow_up_time:
            self.blow_up_time = failure.time


def run_model(config: ExperimentConfig, params: LatticeParams | None = None, model: str | None = None):
    """Integrate from the single-site input; returns (trajectory, BlowUpError or None)."""
    params = params or config.params
    model = model or config.model
    initial = single_site_state(params.n_cells, config.i_in)
    try:
        if model == 'hermitian':
            traj = integrate_reciprocal(params, initial, config.t_final, config.dt, config.stride)
        elif model == 'creutz':
            traj = integrate_creutz(params, to_creutz(initial), config.t_final, config.dt, config.stride)
        else:
            traj = integrate(params, initial, config.t_final, config.dt, config.stride)
    except BlowUpError as exc:
        logger.warning(f"Run '{config.name}' diverged at t = {exc.time:.6g}; keeping partial trajectory")
        return exc.trajectory, exc
    return traj, None


def linear_profile(params: LatticeParams, gamma_bar) -> list[float]:
    """gamma_1 = gamma_s, gamma_2 from the time average, bulk at gamma_0."""
    profile = [params.gammas] + [params.gamma0] * (params.n_cells - 1)
    if params.n_cells > 1:
        profile[1] = float(gamma_bar[1])
    return profile


def defect_profile(params: LatticeParams) -> list[float]:
    return [params.gammas] + [params.gamma0] * (params.n_cells - 1)


def _covers(traj: Trajectory, window) -> bool:
    return traj.times[-1] >= window[1] - 1e-9 * max(1.0, window[1])


def _nan_to_none(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


# Tables


def trajectory_table(traj: Trajectory, model: str, store_amplitudes: bool) -> Table:
    n = traj.n_cells
    header = ['t'] + [f'I_{k}' for k in range(1, n + 1)]
    columns = [traj.times[:, None], traj.intensities]
    if store_amplitudes:
        if model == 'creutz':
            labels = [f'{leg}_{k}' for k in range(1, n + 1) for leg in ('phi_c', 'phi_d')]
        else:
            labels = [f'psi_{j}' for j in range(1, 2 * n + 1)]
        header += [f'{part}_{label}' for label in labels for part in ('Re', 'Im')]
        interleaved = np.empty((traj.times.size, 4 * n))
        interleaved[:, 0::2] = traj.states.real
        interleaved[:, 1::2] = traj.states.imag
        columns.append(interleaved)
    rows = [tuple(row) for row in np.hstack(columns).tolist()]
    shown = tuple(f'I_{k}' for k in range(1, min(n, TRAJECTORY_PLOT_CELLS) + 1))
    return Table('trajectory', tuple(header), rows, Plot('line', 't', shown, title='cell intensities'))


def averages_table(obs, i_in: float) -> Table:
    rows = [
        (k, i_bar, i_bar / i_in if i_in > 0 else None, gamma_bar)
        for k, (i_bar, gamma_bar) in enumerate(zip(obs.i_bar_cells.tolist(), obs.gamma_bar_cells.tolist()), 1)
    ]
    return Table(
        'averages',
        ('cell', 'i_bar', 'i_bar_over_i_in', 'gamma_bar'),
        rows,
        Plot('points', 'cell', ('i_bar_over_i_in',), title='time-averaged intensity', logy=True),
    )


def heatmap_table(traj: Trajectory, params: LatticeParams, gamma_crit: float, name: str = 'heatmap') -> Table:
    heat = phase_heatmap(traj, params, gamma_crit)
    header = ('t',) + tuple(f'cell_{k}' for k in range(1, traj.n_cells + 1))
    rows = [(t,) + tuple(int(v) for v in row) for t, row in zip(traj.times.tolist(), heat)]
    return Table(name, header, rows, Plot('heatmap', 't', title=f'gamma_n > {gamma_crit:.4g}'))


def spectrum_table(spectrum) -> Table:
    overlaps = initial_overlaps(spectrum)
    rows = [
        (k, float(e), bool(g), float(o))
        for k, (e, g, o) in enumerate(zip(spectrum.eigenvalues, spectrum.in_gap, overlaps))
    ]
    return Table(
        'spectrum', ('index', 'energy', 'in_gap', 'overlap'), rows,
        Plot('points', 'index', ('energy',), title='effective linear spectrum'),
    )


def key_value_table(name: str, items: dict) -> Table:
    return Table(name, ('quantity', 'value'), [(k, v) for k, v in items.items()])


def defect_tables(config: ExperimentConfig) -> tuple[list[Table], dict]:
    """Closed-form end states against the eigensolver, weights and the Rabi picture."""
    params = config.params
    sol = analytic_defect(params.kappa, params.nu, params.gammas, params.gamma0)
    values = asdict(sol)
    values['overlap'] = sol.overlap
    for key, root, args in (
        ('gamma_sc_root', threshold_root_gammas, (params.kappa, params.nu, params.gamma0)),
        ('gamma_0c_root', threshold_root_gamma0, (params.kappa, params.nu, params.gammas)),
    ):
        try:
            values[key] = root(*args)
        except DomainError:
            values[key] = None

    model = build_linear_model(params.kappa, params.nu, defect_profile(params))
    spectrum = eigensolve(model)
    values['e_d_numeric'] = defect_energy(spectrum)
    tables = []

    if sol.localized:
        plus, minus = analytic_defect_states(sol, params.n_cells)
        index = defect_state_index(spectrum)
        numeric = spectrum.eigenvectors_h[:, index] if index is not None else np.full(plus.size, np.nan)
        if np.dot(numeric, plus.real) < 0:
            numeric = -numeric
        values['state_l2_error'] = _nan_to_none(np.linalg.norm(numeric - plus.real))
        tables.append(Table(
            'defect-states',
            ('site', 'psi_plus', 'psi_minus', 'numeric'),
            [(j, p, m, n) for j, (p, m, n) in enumerate(zip(plus.real.tolist(), minus.real.tolist(), numeric.tolist()), 1)],
            Plot('line', 'site', ('psi_plus', 'numeric'), title='end state'),
        ))

        times = np.linspace(0.0, config.t_final, RABI_SAMPLES)
        initial = np.zeros(2 * params.n_cells, dtype=np.complex128)
        initial[0] = 1.0
        exact = propagate_linear(model, spectrum, initial, times)
        rabi = np.array([rabi_evolution(sol, model, t) for t in times])
        exact_edge = cell_intensities_rows(exact)[:, 0]
        rabi_edge = cell_intensities_rows(rabi)[:, 0]
        tables.append(Table(
            'rabi', ('t', 'I_1_exact', 'I_1_rabi'),
            [(t, e, r) for t, e, r in zip(times.tolist(), exact_edge.tolist(), rabi_edge.tolist())],
            Plot('line', 't', ('I_1_exact', 'I_1_rabi'), title='edge intensity, linear model'),
        ))

    for name, curve, label in (
        ('weights-gamma0', lambda: weight_curve_gamma0(params.kappa, params.nu, params.gammas), 'gamma0'),
        ('weights-gammas', lambda: weight_curve_gammas(params.kappa, params.nu, params.gamma0), 'gammas'),
    ):
        try:
            grid, weights = curve()
        except DomainError as exc:
            logger.info(f"Skipping {name}: {exc}")
            continue
        tables.append(Table(
            name, (label, 'weight'), list(zip(grid.tolist(), weights.tolist())),
            Plot('line', label, ('weight',), title='Rabi weight'),
        ))

    tables.insert(0, key_value_table('defect', values))
    summary = {'e_d': sol.e_d, 'period': sol.period, 'weight': sol.weight, 'localized': sol.localized}
    return tables, summary


def cell_intensities_rows(states) -> np.ndarray:
    states = np.asarray(states)
    return np.abs(states[:, 0::2]) ** 2 + np.abs(states[:, 1::2]) ** 2


# Tasks


def task_evolve(record: RunRecord):
    config = record.config
    params = config.params
    traj, failure = run_model(config)
    record.max_intensity = traj.max_total_intensity
    if failure is not None:
        record.flag_blow_up(failure)
    outputs = set(config.outputs)
    summary = record.summary

    if 'trajectory' in outputs:
        record.tables.append(trajectory_table(traj, config.model, config.store_amplitudes))

    obs = None
    if _covers(traj, config.window):
        obs = averaged_observables(traj, params, *config.window)
        summary['edge_fraction'] = obs.edge_fraction
        summary['i_bar_total'] = obs.i_bar_total
        summary['i_bar_over_i_in'] = obs.i_bar_total / config.i_in if config.i_in > 0 else None
        if 'averages' in outputs:
            record.tables.append(averages_table(obs, config.i_in))
    elif outputs & {'averages', 'period'}:
        logger.warning(f"Run '{config.name}' ended before the averaging window; skipping averages")

    if 'period' in outputs:
        values = {'period': extract_period(traj, 1, config.t_transient), 't_transient': config.t_transient}
        if obs is not None and config.model != 'hermitian' and params.n_cells > 1:
            values['gamma_bar_2'] = float(obs.gamma_bar_cells[1])
            try:
                values['linear_period'] = linear_period(params.kappa, params.nu, linear_profile(params, obs.gamma_bar_cells))
            except SingularTransformError as exc:
                logger.warning(f"No linear period: {exc}")
                values['linear_period'] = None
        summary['period'] = values['period']
        record.tables.append(key_value_table('period', values))

    if 'heatmap' in outputs:
        table = heatmap_table(traj, params, config.gamma_crit)
        record.tables.append(table)
        summary['topological_cells_final'] = int(sum(table.rows[-1][1:]))

    if 'spectrum' in outputs:
        if config.profile is not None:
            profile = list(config.profile)
        elif obs is not None:
            profile = obs.gamma_bar_cells.tolist()
        else:
            profile = defect_profile(params)
        spectrum = eigensolve(build_linear_model(params.kappa, params.nu, profile))
        record.tables.append(spectrum_table(spectrum))
        summary['e_d_linear'] = defect_energy(spectrum)

    if 'defect' in outputs:
        tables, _ = defect_tables(config)
        record.tables.extend(tables)


def sweep_row(parameter: str, value: float, config: ExperimentConfig) -> tuple:
    """One sweep point: averages, breather period and the static-model period."""
    point = config.with_value(parameter, value)
    params = point.params
    traj, failure = run_model(point)
    if failure is not None or not _covers(traj, point.window):
        return (value,) + (None,) * 7 + (True,)
    obs = averaged_observables(traj, params, *point.window)
    gamma_bar = [float(obs.gamma_bar_cells[k]) if k < params.n_cells else None for k in range(3)]
    period = extract_period(traj, 1, point.t_transient)
    predicted = None
    if point.model != 'hermitian' and params.n_cells > 1:
        try:
            predicted = linear_period(params.kappa, params.nu, linear_profile(params, obs.gamma_bar_cells))
        except SingularTransformError:
            predicted = None
    logger.debug(f"Sweep point {parameter}={value:.6g}: edge fraction {obs.edge_fraction:.4g}, period {period}")
    return (
        value,
        obs.edge_fraction,
        obs.i_bar_total / point.i_in if point.i_in > 0 else None,
        *gamma_bar,
        period,
        predicted,
        False,
    )


SWEEP_HEADER = (
    'value', 'i_bar_1_over_i_bar', 'i_bar_over_i_in',
    'gamma_bar_1', 'gamma_bar_2', 'gamma_bar_3',
    'period', 'linear_period', 'blew_up',
)


def run_sweep(config: ExperimentConfig, workers: int = 1) -> list[tuple]:
    axis = config.sweep
    values = axis.values()
    logger.info(f"Sweeping {axis.parameter} over {len(values)} points with {workers} worker(s)")
    if workers <= 1:
        return [sweep_row(axis.parameter, v, config) for v in values]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(sweep_row, [axis.parameter] * len(values), values, [config] * len(values)))


def first_crossing(values, series, threshold):
    for value, item in zip(values, series):
        if item is not None and item > threshold:
            return value
    return None


def period_jump(values, periods):
    """Sweep value at the largest relative period change between neighbours.

    None unless that change exceeds PERIOD_JUMP. A point without a period
    is never compared.
    """
    largest, at = PERIOD_JUMP, None
    for k in range(1, len(periods)):
        before, after = periods[k - 1], periods[k]
        if before and after and abs(after - before) / before > largest:
            largest, at = abs(after - before) / before, values[k]
    return at


def task_sweep(record: RunRecord, workers: int):
    config = record.config
    if config.sweep is None:
        raise ConfigError({'sweep': ['a sweep block is required for the sweep task']})
    rows = run_sweep(config, workers)
    values = [row[0] for row in rows]
    record.tables.append(Table(
        'sweep', SWEEP_HEADER, rows,
        Plot('points', 'value', ('i_bar_1_over_i_bar', 'i_bar_over_i_in'),
             title=f'sweep over {config.sweep.parameter}', logx=config.sweep.spacing == 'log'),
    ))
    failed = [row[0] for row in rows if row[-1]]
    if failed:
        record.blew_up = True
    record.summary.update({
        'parameter': config.sweep.parameter,
        'points': len(rows),
        'blown_up_points': len(failed),
        'gamma_bar_1_crossing': first_crossing(values, [row[3] for row in rows], config.gamma_crit),
        'gamma_bar_2_crossing': first_crossing(values, [row[4] for row in rows], config.gamma_crit),
        'period_jump': period_jump(values, [row[6] for row in rows]),
    })


def task_spectrum(record: RunRecord):
    config = record.config
    params = config.params
    profile = list(config.profile) if config.profile is not None else defect_profile(params)
    spectrum = eigensolve(build_linear_model(params.kappa, params.nu, profile))
    record.tables.append(spectrum_table(spectrum))
    e_d = defect_energy(spectrum)
    record.summary.update({
        'in_gap_levels': int(np.count_nonzero(spectrum.in_gap)),
        'e_d': e_d,
        'linear_period': math.pi / e_d if e_d else None,
    })


def task_defect(record: RunRecord):
    tables, summary = defect_tables(record.config)
    record.tables.extend(tables)
    record.summary.update(summary)


def task_creutz_check(record: RunRecord):
    config = record.config
    initial = single_site_state(config.params.n_cells, config.i_in)
    try:
        times, deviation = equivalence_trace(config.params, initial, config.t_final, config.dt, config.stride)
    except BlowUpError as exc:
        record.flag_blow_up(exc)
        return
    record.tables.append(Table(
        'equivalence', ('t', 'deviation'), list(zip(times.tolist(), deviation.tolist())),
        Plot('line', 't', ('deviation',), title='SSH vs Creutz intensity deviation'),
    ))
    record.summary['max_deviation'] = float(deviation.max())


def _wall_advances(onsets) -> bool:
    """Cells switch on one after another, each strictly later than the previous."""
    switched = onsets[~np.isnan(onsets)]
    return switched.size > 1 and bool(np.all(np.diff(switched) > 0))


def _static_after(heat, times, t_from) -> bool:
    """Every heat-map row from ``t_from`` on equals the last one."""
    heat = np.asarray(heat)
    settled = heat[np.asarray(times)[:heat.shape[0]] >= t_from]
    if settled.shape[0] == 0:
        return True
    return bool(np.all(settled == settled[-1]))


def task_hermitian_compare(record: RunRecord):
    """Reciprocal model on the configured parameters against the breather on ``reference``."""
    config = record.config
    hermitian_params = config.params
    breather_params = config.reference_params()
    hermitian_crit = config.gamma_crit if config.model == 'hermitian' else hermitian_gamma_crit(hermitian_params)
    breather_crit = breather_params.gamma_crit

    runs = {}
    for label, params, model in (
        ('hermitian', hermitian_params, 'hermitian'),
        ('breather', breather_params, 'nonreciprocal'),
    ):
        traj, failure = run_model(config, params, model)
        if failure is not None:
            record.flag_blow_up(failure)
        runs[label] = (traj, params)
    record.max_intensity = max(traj.max_total_intensity for traj, _ in runs.values())

    t_eval = min(config.t_final, *(traj.times[-1] for traj, _ in runs.values()))
    plateau = {label: plateau_metric(traj, t_eval) for label, (traj, _) in runs.items()}
    record.tables.append(Table(
        'plateau', ('model', 't_eval', 'plateau_metric'),
        [(label, t_eval, value) for label, value in plateau.items()],
    ))

    profiles = {label: cell_profile(traj, t_eval) for label, (traj, _) in runs.items()}
    n_cells = min(p.size for p in profiles.values())
    scale = config.i_in if config.i_in > 0 else 1.0
    record.tables.append(Table(
        'profiles', ('cell', 'hermitian', 'breather'),
        [(k + 1, profiles['hermitian'][k] / scale, profiles['breather'][k] / scale) for k in range(n_cells)],
        Plot('points', 'cell', ('hermitian', 'breather'), title=f'I_n / I_in at t = {t_eval:.4g}', logy=True),
    ))

    heat = {
        'hermitian': phase_heatmap(runs['hermitian'][0], hermitian_params, hermitian_crit),
        'breather': phase_heatmap(runs['breather'][0], breather_params, breather_crit),
    }
    onsets = {label: domain_onsets(heat[label], runs[label][0].times) for label in heat}
    record.tables.append(Table(
        'domains', ('cell', 'onset_hermitian', 'onset_breather'),
        [(k + 1, _nan_to_none(onsets['hermitian'][k]), _nan_to_none(onsets['breather'][k])) for k in range(n_cells)],
    ))

    samples = min(h.shape[0] for h in heat.values())
    extent = {label: domain_extent(h[:samples]) for label, h in heat.items()}
    times = runs['hermitian'][0].times[:samples]
    record.tables.append(Table(
        'extent', ('t', 'extent_hermitian', 'extent_breather'),
        [(t, int(a), int(b)) for t, a, b in zip(times.tolist(), extent['hermitian'], extent['breather'])],
        Plot('line', 't', ('extent_hermitian', 'extent_breather'), title='topological cells'),
    ))

    if 'heatmap' in config.outputs:
        record.tables.append(heatmap_table(runs['hermitian'][0], hermitian_params, hermitian_crit, 'heatmap-hermitian'))
        record.tables.append(heatmap_table(runs['breather'][0], breather_params, breather_crit, 'heatmap-breather'))

    record.summary.update({
        'plateau_hermitian': plateau['hermitian'],
        'plateau_breather': plateau['breather'],
        'hermitian_wall_advances': _wall_advances(onsets['hermitian']),
        'breather_domain_static': _static_after(heat['breather'], runs['breather'][0].times, config.t_transient),
    })


def run_experiment(config: ExperimentConfig, task: str = 'evolve', out_dir=None, workers: int = 1) -> RunRecord:
    """Run one task for ``config`` and write its outputs; returns the RunRecord.

    A divergent integration flags the record and keeps whatever was computed
    before the failure; other errors propagate.
    """
    if task not in TASKS:
        raise DomainError(f"unknown task '{task}'; choose from {', '.join(TASKS)}")
    out_dir = Path(out_dir) if out_dir is not None else Path(settings.BREATHER_LAB['OUTPUT_DIR'])
    record = RunRecord(config=config, task=task, out_dir=out_dir)
    logger.info(f"Starting {task} for '{config.name}' ({config.model}, N={config.params.n_cells}, I_in={config.i_in:g})")
    started = time.perf_counter()

    if task == 'evolve':
        task_evolve(record)
    elif task == 'sweep':
        task_sweep(record, workers)
    elif task == 'spectrum':
        task_spectrum(record)
    elif task == 'defect':
        task_defect(record)
    elif task == 'creutz-check':
        task_creutz_check(record)
    else:
        task_hermitian_compare(record)

    record.duration = time.perf_counter() - started
    record.summary.update({
        'task': task,
        'model': config.model,
        'max_total_intensity': record.max_intensity,
        'blew_up': record.blew_up,
        'blow_up_time': record.blow_up_time,
    })
    record.tables.append(key_value_table('summary', record.summary))
    emit_outputs(record)

    status = 'DIVERGED' if record.blew_up else 'ok'
    logger.info(f"Finished {task} for '{config.name}' in {record.duration:.2f}s [{status}]")
    return record
