"""
Static effective linear model, its Hermitian partner and the closed-form
defect-state apparatus.

H_l carries intensity-independent gamma_n. With
S = diag[1, b1, b1, b1 b2, b1 b2, ...] and b_n = sqrt((kappa-g_n)/(kappa+g_n)),
H_l = S H_h S^-1 where H_h is the Hermitian SSH chain with intracell hopping
kappa_n = sqrt(kappa^2 - g_n^2) and intercell hopping nu.

Closed forms are evaluated in nu-rescaled units (kappa/nu, gamma/nu) and
scaled back: energies and hoppings carry a factor nu, a, b, r, N^2 and w are
dimensionless.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.optimize import brentq

from .exceptions import DomainError, NotLocalizedError, SingularTransformError
from .lattice import GammaProfile, StateVector
from .tridiagonal import tridiagonal_eigh

logger = logging.getLogger(__name__)

GAP_MARGIN = 1e-6


@dataclass(frozen=True)
class LinearModel:
    kappa: float
    nu: float
    profile: GammaProfile
    h_l: npt.NDArray[np.float64]
    h_h: npt.NDArray[np.float64]
    s_diag: npt.NDArray[np.float64]
    beta: npt.NDArray[np.float64]

    @property
    def n_cells(self) -> int:
        return self.profile.size

    @property
    def intracell(self) -> npt.NDArray[np.float64]:
        """kappa_n = sqrt(kappa^2 - gamma_n^2)."""
        return np.sqrt(self.kappa**2 - self.profile**2)

    @property
    def gap(self) -> float:
        """Half-width of the bulk gap |kappa_bulk - nu|, taken from the last cell."""
        return abs(float(self.intracell[-1]) - self.nu)


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: npt.NDArray[np.float64]
    eigenvectors_h: npt.NDArray[np.float64]
    eigenvectors_l: npt.NDArray[np.float64]
    in_gap: npt.NDArray[np.bool_]


@dataclass(frozen=True)
class DefectSolution:
    """End-state bundle of the one-cell defect chain (gamma_1 = gamma_d, rest gamma_0).

    Quantities that do not exist for the given parameters are None:
    ``bound_state`` is False when kappa_0^2 - kappa_d^2 <= nu^2 (b imaginary),
    ``localized`` is False when r <= 1, and thresholds whose radicand is
    negative are undefined.
    """

    kappa: float
    nu: float
    gamma_d: float
    gamma_0: float
    kappa_d: float
    kappa_0: float
    r: float
    bound_state: bool
    localized: bool
    a: float | None
    b: float | None
    norm_sq: float | None
    e_d: float | None
    weight: float | None
    period: float | None
    gamma_c: float | None
    gamma_sc: float | None
    gamma_0c: float | None
    kappa_sc: float | None
    kappa_0c: float | None

    @property
    def overlap(self) -> float | None:
        """<Psi_d^+|psi(0)> for psi(0) = (1, 0, 0, ...); the minus state gives its negative."""
        if self.norm_sq is None:
            return None
        return 1.0 / math.sqrt(self.norm_sq)


def _beta(kappa: float, profile: GammaProfile) -> npt.NDArray[np.float64]:
    return np.sqrt((kappa - profile) / (kappa + profile))


def _s_diag(beta) -> npt.NDArray[np.float64]:
    products = np.cumprod(beta)
    s = np.empty(2 * beta.size)
    s[0] = 1.0
    s[1::2] = products
    s[2::2] = products[:-1]
    return s


def build_linear_model(kappa: float, nu: float, profile) -> LinearModel:
    """Assemble H_l, H_h and S for a static gamma profile."""
    gamma = np.array(profile, dtype=float)
    if gamma.ndim != 1 or gamma.size == 0:
        raise DomainError("gamma profile must be a non-empty sequence")
    if np.any(gamma < 0):
        raise DomainError("gamma profile entries must be non-negative")
    if np.any(gamma >= kappa):
        bad = int(np.argmax(gamma >= kappa)) + 1
        raise SingularTransformError(
            f"gamma_{bad} = {gamma[bad - 1]} >= kappa = {kappa}: similarity transform is singular"
        )
    n = gamma.size
    n_sites = 2 * n
    cells = np.arange(n)

    h_l = np.zeros((n_sites, n_sites))
    h_l[2 * cells, 2 * cells + 1] = kappa + gamma
    h_l[2 * cells + 1, 2 * cells] = kappa - gamma
    h_l[2 * cells[:-1] + 1, 2 * cells[:-1] + 2] = nu
    h_l[2 * cells[:-1] + 2, 2 * cells[:-1] + 1] = nu

    intracell = np.sqrt(kappa**2 - gamma**2)
    h_h = np.zeros((n_sites, n_sites))
    h_h[2 * cells, 2 * cells + 1] = intracell
    h_h[2 * cells + 1, 2 * cells] = intracell
    h_h[2 * cells[:-1] + 1, 2 * cells[:-1] + 2] = nu
    h_h[2 * cells[:-1] + 2, 2 * cells[:-1] + 1] = nu

    beta = _beta(kappa, gamma)
    s_diag = _s_diag(beta)
    logger.debug(f"Linear model: N={n}, min beta={beta.min():.4g}")
    for array in (h_l, h_h, s_diag, beta, gamma):
        array.setflags(write=False)
    return LinearModel(kappa, nu, gamma, h_l, h_h, s_diag, beta)


def _fix_sign(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    picks = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[picks, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigensolve(model: LinearModel) -> SpectralResult:
    """Full spectrum of H_h with the tridiagonal QL solver; H_l vectors are S v."""
    diagonal = np.zeros(2 * model.n_cells)
    offdiagonal = np.diagonal(model.h_h, offset=1)
    energies, vectors_h = tridiagonal_eigh(diagonal, offdiagonal)
    vectors_h = _fix_sign(vectors_h)
    vectors_l = model.s_diag[:, None] * vectors_h
    vectors_l = _fix_sign(vectors_l / np.linalg.norm(vectors_l, axis=0))
    in_gap = np.abs(energies) < model.gap - GAP_MARGIN * model.nu
    logger.info(
        f"Eigensolve: {energies.size} levels, {np.count_nonzero(in_gap)} in gap "
        f"(|E| < {model.gap:.6g})"
    )
    return SpectralResult(energies, vectors_h, vectors_l, in_gap)


def defect_energy(spectrum: SpectralResult) -> float | None:
    """Smallest positive in-gap eigenvalue, the numerical E_d."""
    candidates = spectrum.eigenvalues[spectrum.in_gap & (spectrum.eigenvalues > 0)]
    if candidates.size == 0:
        return None
    return float(candidates.min())


def defect_state_index(spectrum: SpectralResult) -> int | None:
    e_d = defect_energy(spectrum)
    if e_d is None:
        return None
    return int(np.flatnonzero(spectrum.eigenvalues == e_d)[0])


def linear_period(kappa: float, nu: float, profile) -> float | None:
    """Rabi period pi/E_d predicted by the static model for ``profile``."""
    e_d = defect_energy(eigensolve(build_linear_model(kappa, nu, profile)))
    if e_d is None:
        return None
    return math.pi / e_d


def initial_overlaps(spectrum: SpectralResult) -> npt.NDArray[np.float64]:
    """<s|psi(0)> for psi(0) = (1, 0, 0, ...) over every eigenstate of H_h."""
    return spectrum.eigenvectors_h[0].copy()


def propagate_linear(model: LinearModel, spectrum: SpectralResult, initial, times):
    """Exact evolution S exp(-i H_h t) S^-1 psi(0); returns shape (len(times), sites)."""
    psi0 = np.asarray(initial, dtype=np.complex128)
    coefficients = spectrum.eigenvectors_h.T @ (psi0 / model.s_diag)
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), spectrum.eigenvalues))
    return (phases * coefficients) @ spectrum.eigenvectors_h.T * model.s_diag


def _sqrt_or_none(value: float) -> float | None:
    return math.sqrt(value) if value >= 0 else None


def _r_reduced(k0: float, kd: float) -> float:
    return k0 - kd**2 / k0


def analytic_defect(kappa: float, nu: float, gamma_d: float, gamma_0: float) -> DefectSolution:
    """Closed-form end states of the one-cell defect chain."""
    if not nu > 0:
        raise DomainError(f"nu must be positive, got {nu}")
    if not 0 <= gamma_0 < gamma_d < kappa:
        raise DomainError(
            f"require 0 <= gamma_0 < gamma_d < kappa, got gamma_0={gamma_0}, "
            f"gamma_d={gamma_d}, kappa={kappa}"
        )
    k, gd, g0 = kappa / nu, gamma_d / nu, gamma_0 / nu
    kd = math.sqrt(k**2 - gd**2)
    k0 = math.sqrt(k**2 - g0**2)
    r = _r_reduced(k0, kd)
    spread = k0**2 - kd**2
    bound_state = spread > 1.0
    localized = bound_state and r > 1.0

    a = b = norm_sq = e_d = weight = period = None
    if bound_state:
        b = math.sqrt(1.0 - 1.0 / spread)
        e_d = kd * b * nu
        # from E b = kappa_d + a with E = kappa_d b
        a = kd * b**2 - kd
        if localized:
            norm_sq = 1.0 + (b**2 + a**2) / (1.0 - r**-2)
            weight = 2.0 / norm_sq
        period = math.pi / e_d if e_d > 0 else None

    gamma_c = _sqrt_or_none(k**2 - 1.0)
    gamma_sc = _sqrt_or_none(g0**2 + k0)
    kappa_sc = _sqrt_or_none(k0**2 - k0)
    gamma_0c = _sqrt_or_none(gd**2 - 0.5 - math.sqrt(kd**2 + 0.25))
    kappa_0c = 0.5 + math.sqrt(kd**2 + 0.25)

    def scaled(value):
        return None if value is None else value * nu

    solution = DefectSolution(
        kappa=kappa,
        nu=nu,
        gamma_d=gamma_d,
        gamma_0=gamma_0,
        kappa_d=kd * nu,
        kappa_0=k0 * nu,
        r=r,
        bound_state=bound_state,
        localized=localized,
        a=a,
        b=b,
        norm_sq=norm_sq,
        e_d=e_d,
        weight=weight,
        period=period,
        gamma_c=scaled(gamma_c),
        gamma_sc=scaled(gamma_sc),
        gamma_0c=scaled(gamma_0c),
        kappa_sc=scaled(kappa_sc),
        kappa_0c=scaled(kappa_0c),
    )
    logger.debug(f"Defect solution: r={r:.6g}, E_d={e_d}, localized={localized}")
    return solution


def norm_sq_closed_form(kappa: float, nu: float, gamma_d: float, gamma_0: float) -> float:
    """N^2 = 2(gd^2-g0^2)(1-gd^2+g0^2) / (k^2 - gd^4 - g0^4 - g0^2(1-2gd^2)), nu-rescaled."""
    k, gd, g0 = kappa / nu, gamma_d / nu, gamma_0 / nu
    numerator = 2.0 * (gd**2 - g0**2) * (1.0 - gd**2 + g0**2)
    denominator = k**2 - gd**4 - g0**4 - g0**2 * (1.0 - 2.0 * gd**2)
    return numerator / denominator


def end_state_profile(sol: DefectSolution, n_sites: int) -> npt.NDArray[np.float64]:
    """Unnormalised u = (1, b, a, -b/r, -a/r, b/r^2, a/r^2, ...), truncated to n_sites."""
    if not sol.localized:
        raise NotLocalizedError(sol.r)
    u = np.empty(n_sites)
    u[0] = 1.0
    tail = np.arange(n_sites - 1)
    ratio = (-1.0 / sol.r) ** (tail // 2)
    u[1:] = np.where(tail % 2 == 0, sol.b, sol.a) * ratio
    return u


def analytic_defect_states(sol: DefectSolution, n_cells: int) -> tuple[StateVector, StateVector]:
    """(Psi_d^+, Psi_d^-): Psi^+ = N^-1 u with energy +E_d, Psi^- = C Psi^+."""
    u = end_state_profile(sol, 2 * n_cells) / math.sqrt(sol.norm_sq)
    plus = u.astype(np.complex128)
    minus = plus.copy()
    minus[0::2] *= -1
    return plus, minus


def rabi_evolution(sol: DefectSolution, model: LinearModel, t: float) -> StateVector:
    """Two-level approximation sum_pm c_pm e^{-+iE_d t} S Psi_d^pm with c_pm = +-N^-1.

    Odd sites carry (2/N^2) S u cos(E_d t), even sites -(2i/N^2) S u sin(E_d t).
    """
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    u = end_state_profile(sol, 2 * model.n_cells) * model.s_diag
    phase = sol.e_d * t
    psi = np.empty(u.size, dtype=np.complex128)
    psi[0::2] = math.cos(phase) * u[0::2]
    psi[1::2] = -1j * math.sin(phase) * u[1::2]
    return (2.0 / sol.norm_sq) * psi


def threshold_root_gammas(kappa: float, nu: float, gamma_0: float) -> float:
    """gamma_d solving r = 1 at fixed gamma_0 (numerical counterpart of gamma_s^c)."""
    k, g0 = kappa / nu, gamma_0 / nu
    k0 = math.sqrt(k**2 - g0**2)

    def excess(gd):
        return _r_reduced(k0, math.sqrt(k**2 - gd**2)) - 1.0

    if excess(k) <= 0:
        raise DomainError(f"no localized end state for any gamma_d at gamma_0 = {gamma_0}")
    return brentq(excess, g0, k, xtol=1e-14, rtol=1e-15) * nu


def threshold_root_gamma0(kappa: float, nu: float, gamma_s: float) -> float:
    """gamma_0 solving r = 1 at fixed gamma_s (numerical counterpart of gamma_0^c)."""
    k, gs = kappa / nu, gamma_s / nu
    ks = math.sqrt(k**2 - gs**2)

    def excess(g0):
        return _r_reduced(math.sqrt(k**2 - g0**2), ks) - 1.0

    if excess(0.0) <= 0:
        raise DomainError(f"no localized end state for any gamma_0 at gamma_s = {gamma_s}")
    return brentq(excess, 0.0, gs, xtol=1e-14, rtol=1e-15) * nu


def weight_curve_gamma0(kappa: float, nu: float, gamma_s: float, count: int = 50):
    """w over gamma_0 in (0, gamma_0^c) at fixed gamma_s; returns (gamma_0, w) arrays."""
    upper = analytic_defect(kappa, nu, gamma_s, 0.0).gamma_0c
    if upper is None:
        raise DomainError(f"gamma_0^c undefined for gamma_s = {gamma_s}")
    grid = np.linspace(0.0, upper, count + 2)[1:-1]
    return grid, np.array([analytic_defect(kappa, nu, gamma_s, g).weight for g in grid])


def weight_curve_gammas(kappa: float, nu: float, gamma_0: float, count: int = 50):
    """w over gamma_s in (gamma_s^c, kappa) at fixed gamma_0; returns (gamma_s, w) arrays."""
    lower = threshold_root_gammas(kappa, nu, gamma_0)
    grid = np.linspace(lower, kappa, count + 2)[1:-1]
    return grid, np.array([analytic_defect(kappa, nu, g, gamma_0).weight for g in grid])
