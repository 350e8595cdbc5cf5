import math

import numpy as np
from django.test import SimpleTestCase, tag

from breatherlab.evolve import (
    Trajectory,
    averaged_observables,
    cell_profile,
    default_stride,
    domain_extent,
    domain_onsets,
    extract_period,
    integrate,
    integrate_linear,
    period_of_trace,
    phase_heatmap,
    propagate,
    rk4_step,
)
from breatherlab.exceptions import BlowUpError, DimensionError, DomainError
from breatherlab.lattice import gamma_of_intensity, single_site_state
from breatherlab.spectral import linear_period

from .utils import KAPPA, breather_params


def constant_trajectory(states, t_final=100.0, samples=201):
    times = np.linspace(0.0, t_final, samples)
    return Trajectory(times, np.tile(np.asarray(states, dtype=complex), (samples, 1)), 1, times[1])


class IntegratorTests(SimpleTestCase):
    def test_rk4_step_matches_exponential(self):
        y = np.array([1.0 + 0j])
        for _ in range(100):
            y = rk4_step(y, 0.01, lambda v: -1j * v)
        self.assertAlmostEqual(abs(y[0] - np.exp(-1j)), 0.0, places=10)

    def test_step_lands_on_t_final(self):
        traj = propagate(lambda v: -1j * v, np.array([1.0 + 0j]), 1.0, dt=0.3)
        np.testing.assert_allclose(traj.times, [0.0, 1 / 3, 2 / 3, 1.0])
        self.assertAlmostEqual(traj.dt, 1 / 3)

    def test_stride_keeps_both_ends(self):
        traj = propagate(lambda v: -1j * v, np.array([1.0 + 0j]), 1.0, dt=0.1, stride=3)
        np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])

    def test_default_stride_targets_two_thousand_samples(self):
        self.assertEqual(default_stride(100.0, 1e-3), 50)
        self.assertEqual(default_stride(1.0, 0.3), 1)

    def test_invalid_step(self):
        with self.assertRaises(DomainError):
            propagate(lambda v: v, np.array([1.0 + 0j]), 1.0, dt=0.0)
        with self.assertRaises(DomainError):
            propagate(lambda v: v, np.array([1.0 + 0j]), 0.001, dt=0.01)

    def test_fourth_order_convergence(self):
        params = breather_params(n_cells=3)
        psi0 = single_site_state(3, 5.0)
        reference = integrate(params, psi0, 1.0, dt=0.0025).states[-1]
        coarse = integrate(params, psi0, 1.0, dt=0.02).states[-1]
        fine = integrate(params, psi0, 1.0, dt=0.01).states[-1]
        ratio = np.linalg.norm(coarse - reference) / np.linalg.norm(fine - reference)
        self.assertGreaterEqual(ratio, 8.0)
        self.assertLessEqual(ratio, 32.0)

    def test_hermitian_limit_conserves_norm(self):
        params = breather_params(n_cells=10, gamma0=0.0, gammas=0.0)
        traj = integrate(params, single_site_state(10, 1.0), 10.0, dt=0.01)
        drift = np.max(np.abs(traj.total_intensity - 1.0))
        self.assertLess(drift, 1e-8)

    def test_weak_input_follows_the_frozen_linear_model(self):
        params = breather_params(n_cells=10)
        psi0 = single_site_state(10, 1e-6)
        nonlinear = integrate(params, psi0, 10.0, dt=0.01)
        linear = integrate_linear(KAPPA, 1.0, [params.gamma0] * 10, psi0, 10.0, dt=0.01)
        scale = np.linalg.norm(psi0)
        self.assertLess(np.max(np.abs(nonlinear.states - linear.states)) / scale, 1e-4)

    def test_blow_up_keeps_partial_trajectory(self):
        with self.assertRaises(BlowUpError) as caught:
            propagate(lambda v: v, np.array([1.0 + 0j]), 30.0, dt=0.01, stride=10)
        error = caught.exception
        # |y|^2 = e^{2t} crosses 1e12 near t = 13.8
        self.assertGreater(error.time, 13.0)
        self.assertLess(error.time, 15.0)
        self.assertLess(error.trajectory.times[-1], error.time)
        self.assertGreater(error.trajectory.times.size, 100)

    def test_non_finite_state_trips_guard(self):
        with self.assertRaises(BlowUpError):
            propagate(lambda v: v * np.nan, np.array([1.0 + 0j]), 1.0, dt=0.1)


class TrajectoryTests(SimpleTestCase):
    def test_arrays_are_read_only(self):
        traj = constant_trajectory([1, 0, 0, 0])
        with self.assertRaises(ValueError):
            traj.states[0, 0] = 2.0

    def test_shape_and_order_checks(self):
        with self.assertRaises(DimensionError):
            Trajectory(np.array([0.0, 1.0]), np.zeros((3, 4), dtype=complex), 1, 1.0)
        with self.assertRaises(DomainError):
            Trajectory(np.array([1.0, 0.0]), np.zeros((2, 4), dtype=complex), 1, 1.0)

    def test_sample_index_range(self):
        traj = constant_trajectory([1, 0, 0, 0])
        self.assertEqual(traj.sample_index(50.0), 100)
        with self.assertRaises(DomainError):
            traj.sample_index(150.0)


class ObservableTests(SimpleTestCase):
    def setUp(self):
        self.params = breather_params(n_cells=2)
        self.traj = constant_trajectory([1.0, 0.0, math.sqrt(2.0), 0.0])

    def test_window_averages_of_constant_state(self):
        obs = averaged_observables(self.traj, self.params, 50.0, 100.0)
        np.testing.assert_allclose(obs.i_bar_cells, [1.0, 2.0])
        self.assertAlmostEqual(obs.i_bar_total, 3.0)
        self.assertAlmostEqual(obs.edge_fraction, 1 / 3)
        np.testing.assert_allclose(
            obs.gamma_bar_cells, gamma_of_intensity(self.params, np.array([1.0, 2.0]))
        )

    def test_bad_windows(self):
        with self.assertRaises(DomainError):
            averaged_observables(self.traj, self.params, 60.0, 60.0)
        with self.assertRaises(DomainError):
            averaged_observables(self.traj, self.params, 50.0, 150.0)

    def test_cell_profile(self):
        np.testing.assert_allclose(cell_profile(self.traj, 75.0), [1.0, 2.0])


class PeriodTests(SimpleTestCase):
    def test_cosine_period(self):
        times = np.linspace(0.0, 50.0, 5001)
        self.assertAlmostEqual(period_of_trace(times, np.cos(2 * np.pi * times / 5.0)), 5.0, places=9)

    def test_aperiodic_traces(self):
        times = np.linspace(0.0, 50.0, 5001)
        self.assertIsNone(period_of_trace(times, np.exp(-times)))
        self.assertIsNone(period_of_trace(times, np.ones_like(times)))
        # two peaks only
        self.assertIsNone(period_of_trace(times, np.cos(2 * np.pi * times / 20.0)))

    def test_irregular_spacing_is_aperiodic(self):
        times = np.linspace(0.0, 60.0, 6001)
        values = np.zeros_like(times)
        for centre in (5.0, 10.0, 30.0, 33.0, 55.0):
            values += np.exp(-((times - centre) / 0.3) ** 2)
        self.assertIsNone(period_of_trace(times, values))

    def test_extract_period_cell_range(self):
        traj = constant_trajectory([1, 0, 0, 0])
        with self.assertRaises(DomainError):
            extract_period(traj, cell=3)


class HeatmapTests(SimpleTestCase):
    def test_threshold_is_strict(self):
        params = breather_params(n_cells=2, gamma0=0.0, gammas=1.2)
        traj = constant_trajectory([math.sqrt(5.0), 0.0, 0.0, 0.0], samples=3)
        edge_gamma = float(gamma_of_intensity(params, traj.intensities)[0, 0])
        self.assertAlmostEqual(edge_gamma, 1.0, places=12)
        np.testing.assert_array_equal(phase_heatmap(traj, params, edge_gamma), np.zeros((3, 2)))
        np.testing.assert_array_equal(phase_heatmap(traj, params, 0.99)[:, 0], [1, 1, 1])

    def test_onsets_and_extent(self):
        heat = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 0]], dtype=np.uint8)
        times = np.array([0.0, 1.0, 2.0, 3.0])
        onsets = domain_onsets(heat, times)
        np.testing.assert_array_equal(onsets[:2], [1.0, 2.0])
        self.assertTrue(np.isnan(onsets[2]))
        np.testing.assert_array_equal(domain_extent(heat), [0, 1, 2, 2])


@tag('slow')
class RegimeTests(SimpleTestCase):
    """Full-size runs: 100 cells, I_in = 1000 I_s, t = 100."""

    def run_regime(self, **changes):
        params = breather_params(**changes)
        return params, integrate(params, single_site_state(100, 1000.0), 100.0, dt=1e-3)

    def test_fourth_order_convergence_on_the_breather_run(self):
        params = breather_params()
        psi0 = single_site_state(100, 1000.0)
        reference = integrate(params, psi0, 10.0, dt=0.0025).states[-1]
        coarse = integrate(params, psi0, 10.0, dt=0.02).states[-1]
        fine = integrate(params, psi0, 10.0, dt=0.01).states[-1]
        ratio = np.linalg.norm(coarse - reference) / np.linalg.norm(fine - reference)
        self.assertGreaterEqual(ratio, 8.0)
        self.assertLessEqual(ratio, 32.0)

    def test_weak_nonreciprocity_decays_from_the_edge(self):
        params, traj = self.run_regime(gammas=0.5)
        obs = averaged_observables(traj, params, 50.0, 100.0)
        self.assertLess(obs.edge_fraction, 1e-2)

    def test_strong_unsaturated_nonreciprocity_gives_steady_end_mode(self):
        params, traj = self.run_regime(gamma0=1.2)
        window = traj.times >= 50.0
        edge = traj.intensities[window, 0]
        self.assertLess((edge.max() - edge.min()) / edge.max(), 0.1)

    def test_saturable_nonreciprocity_gives_periodic_breather(self):
        params, traj = self.run_regime()
        obs = averaged_observables(traj, params, 50.0, 100.0)
        self.assertGreater(obs.edge_fraction, 0.5)
        period = extract_period(traj, 1, 50.0)
        self.assertIsNotNone(period)
        self.assertGreaterEqual(50.0 / period, 4)
        profile = [params.gammas, float(obs.gamma_bar_cells[1])] + [0.0] * 98
        predicted = linear_period(params.kappa, params.nu, profile)
        self.assertLess(abs(period - predicted) / predicted, 0.15)
