"""
Nonlinear nonreciprocal SSH lattice.

Sites are numbered j = 1..2N in the physics, stored 0-based in arrays:
odd sites (2n-1) sit at even array positions ``psi[0::2]`` and even sites
(2n) at ``psi[1::2]``. Cells are numbered n = 1..N in public arguments.
Open boundary conditions throughout; hbar = 1, energies in units of nu.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt

from .exceptions import DimensionError, DomainError

logger = logging.getLogger(__name__)

StateVector = npt.NDArray[np.complex128]
CellIntensities = npt.NDArray[np.float64]
GammaProfile = npt.NDArray[np.float64]


@dataclass(frozen=True)
class LatticeParams:
    """Physical constants of one model instance."""

    n_cells: int
    kappa: float
    nu: float
    gamma0: float
    gammas: float
    i_sat: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise DomainError(f"n_cells must be a positive integer, got {self.n_cells!r}")
        values = (self.kappa, self.nu, self.gamma0, self.gammas, self.i_sat)
        if not all(math.isfinite(v) for v in values):
            raise DomainError("lattice parameters must be finite")
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        if not self.kappa > self.nu:
            raise DomainError(f"kappa must exceed nu, got kappa={self.kappa}, nu={self.nu}")
        if not 0 <= self.gamma0 <= self.gammas <= self.kappa:
            raise DomainError(
                "require 0 <= gamma0 <= gammas <= kappa, got "
                f"gamma0={self.gamma0}, gammas={self.gammas}, kappa={self.kappa}"
            )
        if not self.i_sat > 0:
            raise DomainError(f"i_sat must be positive, got {self.i_sat}")

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def gamma_crit(self) -> float:
        """Finite-chain critical nonreciprocity sqrt(kappa^2 - nu^2)."""
        return math.sqrt(self.kappa**2 - self.nu**2)

    def with_changes(self, **changes) -> "LatticeParams":
        return replace(self, **changes)


def gamma_of_intensity(params: LatticeParams, intensity):
    """Saturable hopping gamma(I) = gammas - (gammas - gamma0) / (1 + I/I_s).

    Accepts a scalar or an array of intensities; returns the same shape.
    """
    values = np.asarray(intensity, dtype=float)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise DomainError("intensity must be non-negative")
    gamma = params.gammas - (params.gammas - params.gamma0) / (1.0 + values / params.i_sat)
    if gamma.ndim == 0:
        return float(gamma)
    return gamma


def as_state(amplitudes, n_cells: int | None = None) -> StateVector:
    """Validate and copy amplitudes into a complex state vector."""
    state = np.array(amplitudes, dtype=np.complex128)
    if state.ndim != 1 or state.size % 2:
        raise DimensionError(f"state must be a flat vector of even length, got shape {state.shape}")
    if n_cells is not None and state.size != 2 * n_cells:
        raise DimensionError(f"state has {state.size} sites, lattice has {2 * n_cells}")
    if not np.all(np.isfinite(state)):
        raise DomainError("state contains non-finite amplitudes")
    return state


def single_site_state(n_cells: int, i_in: float) -> StateVector:
    """psi_j(0) = sqrt(I_in) delta_{j1}."""
    if i_in < 0:
        raise DomainError(f"input intensity must be non-negative, got {i_in}")
    state = np.zeros(2 * n_cells, dtype=np.complex128)
    state[0] = math.sqrt(i_in)
    return state


def cell_intensities(state: StateVector) -> CellIntensities:
    """I_n = |psi_{2n-1}|^2 + |psi_{2n}|^2."""
    psi = np.asarray(state)
    if psi.ndim != 1 or psi.size % 2:
        raise DimensionError(f"state must be a flat vector of even length, got shape {psi.shape}")
    return np.abs(psi[0::2]) ** 2 + np.abs(psi[1::2]) ** 2


def gamma_profile(params: LatticeParams, state: StateVector) -> GammaProfile:
    return gamma_of_intensity(params, cell_intensities(state))


def apply_frozen(kappa: float, nu: float, gamma: GammaProfile, state: StateVector) -> StateVector:
    """Act with the nonreciprocal SSH stencil at a fixed gamma profile.

    (H psi)_{2n-1} = (kappa + gamma_n) psi_{2n} + nu psi_{2n-2}
    (H psi)_{2n}   = (kappa - gamma_n) psi_{2n-1} + nu psi_{2n+1}
    """
    odd = state[0::2]
    even = state[1::2]
    out = np.empty_like(state)
    out_odd = (kappa + gamma) * even
    out_odd[1:] += nu * even[:-1]
    out_even = (kappa - gamma) * odd
    out_even[:-1] += nu * odd[1:]
    out[0::2] = out_odd
    out[1::2] = out_even
    return out


def apply_hamiltonian(params: LatticeParams, state: StateVector) -> StateVector:
    """H(psi) psi with gamma_n taken from the instantaneous cell intensities."""
    psi = np.asarray(state)
    if psi.shape != (params.n_sites,):
        raise DimensionError(f"state has shape {psi.shape}, lattice has {params.n_sites} sites")
    return apply_frozen(params.kappa, params.nu, gamma_profile(params, psi), psi)


def chiral_apply(state: StateVector) -> StateVector:
    """C = diag(-1, 1, -1, 1, ...)."""
    out = np.array(state, dtype=np.complex128)
    out[0::2] *= -1
    return out
