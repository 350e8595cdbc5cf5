"""
Time evolution of i dpsi/dt = H(psi) psi and the observables derived from it.

The integrator is classical fixed-step RK4. The nonlinearity is re-evaluated
at every stage from that stage's state, so the autonomous nonlinear flow
keeps fourth-order accuracy.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import numpy.typing as npt
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from .exceptions import BlowUpError, DimensionError, DomainError
from .lattice import (
    GammaProfile,
    LatticeParams,
    StateVector,
    apply_frozen,
    apply_hamiltonian,
    as_state,
    cell_intensities,
    gamma_of_intensity,
)

logger = logging.getLogger(__name__)

Rhs = Callable[[StateVector], StateVector]

DEFAULT_DT = 1e-3
TARGET_SAMPLES = 2000
BLOWUP_FACTOR = 1e12


@dataclass(frozen=True)
class Trajectory:
    """Time-sampled states; ``states[i]`` is the state at ``times[i]``."""

    times: npt.NDArray[np.float64]
    states: npt.NDArray[np.complex128]
    sample_stride: int
    dt: float
    max_total_intensity: float = 0.0

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise DimensionError("states must be a (samples, sites) array matching times")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    @property
    def n_cells(self) -> int:
        return self.states.shape[1] // 2

    @property
    def intensities(self) -> npt.NDArray[np.float64]:
        """Cell intensities, shape (samples, cells)."""
        return np.abs(self.states[:, 0::2]) ** 2 + np.abs(self.states[:, 1::2]) ** 2

    @property
    def total_intensity(self) -> npt.NDArray[np.float64]:
        return np.sum(np.abs(self.states) ** 2, axis=1)

    def sample_index(self, t: float) -> int:
        if not self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12:
            raise DomainError(f"t = {t} outside trajectory range [{self.times[0]}, {self.times[-1]}]")
        return int(np.argmin(np.abs(self.times - t)))


@dataclass(frozen=True)
class AveragedObservables:
    i_bar_cells: npt.NDArray[np.float64]
    i_bar_total: float
    gamma_bar_cells: npt.NDArray[np.float64]
    window: tuple[float, float] = field(default=(50.0, 100.0))

    @property
    def edge_fraction(self) -> float:
        """I_bar_1 / I_bar."""
        if self.i_bar_total == 0:
            return 0.0
        return float(self.i_bar_cells[0] / self.i_bar_total)


def default_stride(t_final: float, dt: float, target: int = TARGET_SAMPLES) -> int:
    steps = max(1, round(t_final / dt))
    return max(1, steps // target)


def rk4_step(y: StateVector, dt: float, rhs: Rhs) -> StateVector:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagate(
    rhs: Rhs,
    initial: StateVector,
    t_final: float,
    dt: float = DEFAULT_DT,
    stride: int | None = None,
    blowup_factor: float = BLOWUP_FACTOR,
) -> Trajectory:
    """Integrate dy/dt = rhs(y) with fixed-step RK4, storing every ``stride`` steps.

    The step is adjusted so that an integer number of steps lands on t_final.
    Samples at t = 0 and t = t_final are always stored.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not t_final >= dt:
        raise DomainError(f"t_final must be at least dt, got t_final={t_final}, dt={dt}")
    n_steps = max(1, round(t_final / dt))
    h = t_final / n_steps
    if stride is None:
        stride = default_stride(t_final, dt)
    if stride < 1:
        raise DomainError(f"stride must be a positive integer, got {stride}")

    y = np.array(initial, dtype=np.complex128)
    initial_total = float(np.vdot(y, y).real)
    limit = blowup_factor * initial_total
    logger.debug(f"RK4: {n_steps} steps of {h:.3g}, stride {stride}, initial intensity {initial_total:.6g}")

    times = [0.0]
    states = [y.copy()]
    max_total = initial_total
    for k in range(1, n_steps + 1):
        y = rk4_step(y, h, rhs)
        total = float(np.vdot(y, y).real)
        if not math.isfinite(total) or (initial_total > 0 and total > limit):
            t_fail = k * h
            logger.error(f"Divergence guard tripped at t = {t_fail:.6g}: total intensity {total:.6g}")
            partial = Trajectory(np.array(times), np.array(states), stride, h, max_total)
            raise BlowUpError(t_fail, total, partial)
        max_total = max(max_total, total)
        if k % stride == 0 or k == n_steps:
            times.append(k * h)
            states.append(y.copy())
    return Trajectory(np.array(times), np.array(states), stride, h, max_total)


def integrate(
    params: LatticeParams,
    initial: StateVector,
    t_final: float,
    dt: float = DEFAULT_DT,
    stride: int | None = None,
) -> Trajectory:
    """Evolve the nonlinear nonreciprocal lattice from ``initial``."""
    psi0 = as_state(initial, params.n_cells)
    logger.info(f"Integrating nonreciprocal lattice: N={params.n_cells}, t_final={t_final}, dt={dt}")

    def rhs(y):
        return -1j * apply_hamiltonian(params, y)

    return propagate(rhs, psi0, t_final, dt, stride)


def integrate_linear(
    kappa: float,
    nu: float,
    profile: GammaProfile,
    initial: StateVector,
    t_final: float,
    dt: float = DEFAULT_DT,
    stride: int | None = None,
) -> Trajectory:
    """Evolve the static linear model with gamma_n frozen to ``profile``."""
    gamma = np.asarray(profile, dtype=float)
    psi0 = as_state(initial, gamma.size)

    def rhs(y):
        return -1j * apply_frozen(kappa, nu, gamma, y)

    return propagate(rhs, psi0, t_final, dt, stride)


def _window_mask(times, t_start: float, t_end: float):
    if not t_start < t_end:
        raise DomainError(f"empty averaging window [{t_start}, {t_end}]")
    tol = 1e-9 * max(1.0, abs(t_end))
    if t_start < times[0] - tol or t_end > times[-1] + tol:
        raise DomainError(
            f"window [{t_start}, {t_end}] outside trajectory range [{times[0]}, {times[-1]}]"
        )
    mask = (times >= t_start - tol) & (times <= t_end + tol)
    if np.count_nonzero(mask) < 2:
        raise DomainError(f"window [{t_start}, {t_end}] holds fewer than two samples")
    return mask


def averaged_observables(
    traj: Trajectory, params: LatticeParams, t_start: float = 50.0, t_end: float = 100.0
) -> AveragedObservables:
    """Trapezoidal time averages of I_n(t) and gamma_n(t) over [t_start, t_end]."""
    mask = _window_mask(traj.times, t_start, t_end)
    times = traj.times[mask]
    intensities = traj.intensities[mask]
    gammas = gamma_of_intensity(params, intensities)
    span = times[-1] - times[0]
    i_bar = trapezoid(intensities, times, axis=0) / span
    gamma_bar = trapezoid(gammas, times, axis=0) / span
    gamma_bar = np.clip(gamma_bar, params.gamma0, params.gammas)
    return AveragedObservables(i_bar, float(np.sum(i_bar)), gamma_bar, (t_start, t_end))


def period_of_trace(times, values) -> float | None:
    """Mean spacing of prominent local maxima, or None when aperiodic.

    A peak is a sample strictly above both neighbours with prominence of at
    least 1% of the trace's range. Fewer than three peaks, or a relative
    spread of spacings above 20%, count as aperiodic.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.size < 3:
        return None
    span = float(values.max() - values.min())
    if span <= 0:
        return None
    peaks, _ = find_peaks(values, prominence=0.01 * span)
    peaks = [p for p in peaks if values[p] > values[p - 1] and values[p] > values[p + 1]]
    if len(peaks) < 3:
        return None
    spacings = np.diff(times[peaks])
    mean = float(np.mean(spacings))
    if np.std(spacings) > 0.2 * mean:
        logger.debug(f"Aperiodic trace: spacing spread {np.std(spacings) / mean:.2%}")
        return None
    return mean


def extract_period(traj: Trajectory, cell: int = 1, t_transient: float = 50.0) -> float | None:
    """Breather period from the peaks of I_cell(t) after ``t_transient``."""
    if not 1 <= cell <= traj.n_cells:
        raise DomainError(f"cell {cell} outside 1..{traj.n_cells}")
    mask = traj.times > t_transient
    trace = traj.intensities[mask, cell - 1]
    return period_of_trace(traj.times[mask], trace)


def phase_heatmap(traj: Trajectory, params: LatticeParams, gamma_crit: float) -> npt.NDArray[np.uint8]:
    """Theta(gamma_n(t) - gamma_crit) per (sample, cell), with Theta(0) = 0."""
    gammas = gamma_of_intensity(params, traj.intensities)
    return (gammas > gamma_crit).astype(np.uint8)


def domain_onsets(heatmap, times) -> npt.NDArray[np.float64]:
    """First time each cell turns topological; NaN for cells that never do."""
    heatmap = np.asarray(heatmap)
    onsets = np.full(heatmap.shape[1], np.nan)
    on = heatmap.any(axis=0)
    onsets[on] = np.asarray(times)[np.argmax(heatmap[:, on], axis=0)]
    return onsets


def domain_extent(heatmap) -> npt.NDArray[np.int64]:
    """Number of topological cells at each sample."""
    return np.asarray(heatmap).sum(axis=1)


def cell_profile(traj: Trajectory, at: float) -> npt.NDArray[np.float64]:
    return cell_intensities(traj.states[traj.sample_index(at)])
