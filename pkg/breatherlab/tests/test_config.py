import json
import math

from django.conf import settings
from django.test import SimpleTestCase

from breatherlab.config import ExperimentConfig, SweepAxis, parse_config, serialize_config
from breatherlab.exceptions import ConfigError

from .utils import GAMMA_S, KAPPA, document

MINIMAL = {
    'model': 'nonreciprocal',
    'n_cells': 100,
    'kappa': KAPPA,
    'nu': 1.0,
    'gamma0': 0.0,
    'gammas': GAMMA_S,
    'i_in': 1000.0,
}


def parse(data, overrides=None) -> ExperimentConfig:
    return parse_config(json.dumps(data), overrides)


class DefaultsTests(SimpleTestCase):
    def test_minimal_document(self):
        config = parse(MINIMAL)
        self.assertEqual(config.name, 'experiment')
        self.assertEqual(config.dt, 1e-3)
        self.assertEqual(config.t_final, 100.0)
        self.assertEqual(config.window, (50.0, 100.0))
        self.assertEqual(config.t_transient, 50.0)
        self.assertEqual(config.stride, 50)
        self.assertEqual(config.outputs, ('trajectory', 'averages'))
        self.assertEqual(config.params.i_sat, 1.0)
        self.assertAlmostEqual(config.gamma_crit, 1.0, places=12)
        self.assertIsNone(config.sweep)
        self.assertFalse(config.store_amplitudes)

    def test_hermitian_critical_value(self):
        config = parse(dict(MINIMAL, model='hermitian', kappa=2.0))
        self.assertEqual(config.gamma_crit, 1.0)

    def test_integer_values_accepted(self):
        config = parse(dict(MINIMAL, kappa=2, nu=1, i_in=10))
        self.assertEqual(config.params.kappa, 2.0)
        self.assertIsInstance(config.params.kappa, float)

    def test_overrides_shorten_the_run(self):
        config = parse(MINIMAL, {'dt': 0.01, 't_final': 10.0})
        self.assertEqual(config.dt, 0.01)
        self.assertEqual(config.stride, 1)
        self.assertEqual(config.window, (5.0, 10.0))
        self.assertEqual(config.t_transient, 5.0)

    def test_none_overrides_ignored(self):
        config = parse(MINIMAL, {'dt': None, 't_final': None})
        self.assertEqual(config.t_final, 100.0)

    def test_settings_supply_the_step(self):
        with self.settings(BREATHER_LAB=dict(settings.BREATHER_LAB, DEFAULT_DT=0.005)):
            config = parse(MINIMAL)
        self.assertEqual(config.dt, 0.005)
        self.assertEqual(config.stride, 10)

    def test_bundled_documents_parse(self):
        for path in sorted(settings.BREATHER_LAB['CONFIG_DIR'].glob('*.json')):
            with self.subTest(path=path.name):
                config = parse_config(path.read_text(encoding='utf-8'))
                self.assertEqual(config.name, path.stem)


class RejectionTests(SimpleTestCase):
    def assertRejected(self, data, path):
        with self.assertRaises(ConfigError) as caught:
            parse(data)
        self.assertIn(path, caught.exception.errors)
        self.assertIn(path, str(caught.exception))
        return caught.exception

    def test_malformed_json(self):
        with self.assertRaises(ConfigError) as caught:
            parse_config('{"model": ')
        self.assertIn('document', caught.exception.errors)

    def test_not_an_object(self):
        with self.assertRaises(ConfigError):
            parse_config('[1, 2]')

    def test_unknown_key(self):
        self.assertRejected(dict(MINIMAL, colour='red'), 'colour')

    def test_missing_required_key(self):
        data = dict(MINIMAL)
        del data['kappa']
        self.assertRejected(data, 'kappa')

    def test_gamma0_above_gammas(self):
        error = self.assertRejected(dict(MINIMAL, gamma0=1.3, gammas=1.2), 'gamma0')
        self.assertIn('gamma0 <= gammas', str(error))

    def test_kappa_not_above_nu(self):
        self.assertRejected(dict(MINIMAL, kappa=0.9, gammas=0.5), 'kappa')

    def test_numbers_must_be_numbers(self):
        self.assertRejected(dict(MINIMAL, kappa='1.4'), 'kappa')
        self.assertRejected(dict(MINIMAL, n_cells=True), 'n_cells')
        self.assertRejected(dict(MINIMAL, n_cells=2.5), 'n_cells')

    def test_unknown_model_and_output(self):
        self.assertRejected(dict(MINIMAL, model='kerr'), 'model')
        self.assertRejected(dict(MINIMAL, outputs=['trajectory', 'movie']), 'outputs')

    def test_window_checks(self):
        self.assertRejected(dict(MINIMAL, window=[60, 40]), 'window')
        self.assertRejected(dict(MINIMAL, window=[50, 150]), 'window')
        self.assertRejected(dict(MINIMAL, window=[50]), 'window')

    def test_negative_step(self):
        self.assertRejected(dict(MINIMAL, dt=-0.1), 'dt')

    def test_profile_length(self):
        self.assertRejected(dict(MINIMAL, profile=[0.5, 0.0]), 'profile')

    def test_sweep_block(self):
        sweep = {'parameter': 'i_in', 'min': 10, 'max': 1e4, 'count': 5}
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, count=1)), 'sweep.count')
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, parameter='n_cells')), 'sweep.parameter')
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, step=2)), 'sweep.step')
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, min=-1.0)), 'sweep.min')
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, max=5)), 'sweep.max')
        self.assertRejected(dict(MINIMAL, sweep=dict(sweep, parameter='gamma0', min=0.1, max=1.4)), 'sweep.gamma0')

    def test_reference_block(self):
        self.assertRejected(dict(MINIMAL, reference={'kappa': 1.0}), 'reference')
        self.assertRejected(dict(MINIMAL, reference={'n_cells': 4}), 'reference.n_cells')

    def test_errors_are_collected(self):
        with self.assertRaises(ConfigError) as caught:
            parse(dict(MINIMAL, colour='red', model='kerr', dt='small'))
        self.assertEqual(set(caught.exception.errors), {'colour', 'model', 'dt'})


class SweepAxisTests(SimpleTestCase):
    def test_log_spacing(self):
        values = SweepAxis('i_in', 10.0, 1e4, 4).values()
        for value, expected in zip(values, (10.0, 100.0, 1000.0, 10000.0)):
            self.assertAlmostEqual(value, expected, delta=1e-9 * expected)

    def test_linear_spacing(self):
        self.assertEqual(SweepAxis('gamma0', 0.0, 1.0, 3, 'linear').values(), (0.0, 0.5, 1.0))


class RoundTripTests(SimpleTestCase):
    def test_serialize_then_parse(self):
        config = parse(document(
            name='round-trip',
            window=[1.0, 2.0],
            outputs=['trajectory', 'heatmap', 'spectrum'],
            profile=[GAMMA_S, 0.4, 0.0, 0.0],
            sweep={'parameter': 'gammas', 'min': 0.5, 'max': 1.3, 'count': 3, 'spacing': 'linear'},
            reference={'kappa': 1.5},
            store_amplitudes=True,
        ))
        self.assertEqual(parse_config(serialize_config(config)), config)

    def test_serialized_document_is_explicit(self):
        data = json.loads(serialize_config(parse(MINIMAL)))
        for key in ('dt', 't_final', 'stride', 'window', 'gamma_crit', 'i_sat', 'outputs'):
            self.assertIn(key, data)
        self.assertTrue(math.isclose(data['gamma_crit'], 1.0))

    def test_reference_parameters(self):
        config = parse(dict(MINIMAL, model='hermitian', kappa=2.0, reference={'kappa': KAPPA}))
        self.assertEqual(config.reference_params().kappa, KAPPA)
        self.assertEqual(config.reference_params().gammas, GAMMA_S)
