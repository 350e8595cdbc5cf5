"""
Reciprocal nonlinear SSH chain used as the Hermitian comparison model.

Both intracell directions carry kappa - gamma_n, so the flow conserves the
total intensity and the local topological transition sits at
gamma_c = kappa - nu.
"""
import logging

import numpy as np

from .evolve import DEFAULT_DT, Trajectory, propagate
from .exceptions import DimensionError, DomainError
from .lattice import LatticeParams, StateVector, as_state, gamma_profile

logger = logging.getLogger(__name__)

PLATEAU_CELLS = range(2, 11)


def hermitian_gamma_crit(params: LatticeParams) -> float:
    return params.kappa - params.nu


def apply_reciprocal_frozen(kappa: float, nu: float, gamma, state: StateVector) -> StateVector:
    odd = state[0::2]
    even = state[1::2]
    hopping = kappa - gamma
    out = np.empty_like(state)
    out_odd = hopping * even
    out_odd[1:] += nu * even[:-1]
    out_even = hopping * odd
    out_even[:-1] += nu * odd[1:]
    out[0::2] = out_odd
    out[1::2] = out_even
    return out


def apply_reciprocal_hamiltonian(params: LatticeParams, state: StateVector) -> StateVector:
    psi = np.asarray(state)
    if psi.shape != (params.n_sites,):
        raise DimensionError(f"state has shape {psi.shape}, lattice has {params.n_sites} sites")
    return apply_reciprocal_frozen(params.kappa, params.nu, gamma_profile(params, psi), psi)


def integrate_reciprocal(
    params: LatticeParams,
    initial: StateVector,
    t_final: float,
    dt: float = DEFAULT_DT,
    stride: int | None = None,
) -> Trajectory:
    psi0 = as_state(initial, params.n_cells)
    logger.info(f"Integrating reciprocal lattice: N={params.n_cells}, t_final={t_final}, dt={dt}")

    def rhs(y):
        return -1j * apply_reciprocal_hamiltonian(params, y)

    return propagate(rhs, psi0, t_final, dt, stride)


def plateau_ratio(intensities) -> float:
    """Median of I_{n+1}/I_n over cells n = 2..10 of one intensity profile.

    Near 1 means a plateau, far below 1 means exponential localization.
    Returns 0 when the tail is all zero.
    """
    intensities = np.asarray(intensities, dtype=float)
    cells = [n for n in PLATEAU_CELLS if n + 1 <= intensities.size]
    if not cells:
        raise DomainError("plateau metric needs at least three cells")
    ratios = []
    for n in cells:
        current, following = intensities[n - 1], intensities[n]
        if current > 0:
            ratios.append(following / current)
    if not ratios:
        return 0.0
    return float(np.median(ratios))


def plateau_metric(traj: Trajectory, t_eval: float) -> float:
    """Plateau ratio of the cell intensities at the sample nearest ``t_eval``."""
    return plateau_ratio(traj.intensities[traj.sample_index(t_eval)])
