import json
import math
import shutil
import tempfile
from pathlib import Path

from breatherlab.lattice import LatticeParams

KAPPA = math.sqrt(2.0)
GAMMA_S = math.sqrt(7.0) / 2.0


def breather_params(n_cells=100, **changes):
    values = dict(n_cells=n_cells, kappa=KAPPA, nu=1.0, gamma0=0.0, gammas=GAMMA_S)
    values.update(changes)
    return LatticeParams(**values)


def document(**changes):
    """A small, fast experiment document; keyword arguments replace keys."""
    data = {
        'name': 'sample',
        'model': 'nonreciprocal',
        'n_cells': 4,
        'kappa': KAPPA,
        'nu': 1.0,
        'gamma0': 0.0,
        'gammas': GAMMA_S,
        'i_in': 100.0,
        't_final': 2.0,
        'dt': 0.01,
    }
    data.update(changes)
    return {k: v for k, v in data.items() if v is not None}


class TempDirMixin:
    def make_dir(self) -> Path:
        path = Path(tempfile.mkdtemp(prefix='breatherlab-test-'))
        self.addCleanup(shutil.rmtree, path, ignore_errors=True)
        return path

    def write_config(self, directory: Path, filename='sample.json', **changes) -> Path:
        path = directory / filename
        path.write_text(json.dumps(document(**changes)), encoding='utf-8')
        return path
