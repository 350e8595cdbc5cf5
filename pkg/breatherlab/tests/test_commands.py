from io import StringIO
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from breatherlab.evolve import Trajectory
from breatherlab.exceptions import BlowUpError
from breatherlab.management.commands.figures import SUITE

from .utils import GAMMA_S, TempDirMixin


class ExperimentCommandTests(TempDirMixin, SimpleTestCase):
    def setUp(self):
        self.dir = self.make_dir()
        self.out = self.dir / 'results'

    def run_command(self, name, *args, **options):
        stdout = StringIO()
        call_command(name, *args, stdout=stdout, **options)
        return stdout.getvalue()

    def test_evolve_reports_files(self):
        config = self.write_config(self.dir)
        output = self.run_command('evolve', config=str(config), out=str(self.out))
        self.assertIn("Completed evolve for 'sample'", output)
        self.assertIn('sample-trajectory.csv', output)
        self.assertTrue((self.out / 'sample-averages.csv').exists())

    def test_time_overrides(self):
        config = self.write_config(self.dir)
        self.run_command('evolve', config=str(config), out=str(self.out), dt=0.02, tfinal=1.0)
        lines = (self.out / 'sample-trajectory.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(lines), 52)

    def test_invalid_document_exits_with_one(self):
        config = self.write_config(self.dir, gamma0=2.0)
        with self.assertRaises(CommandError) as caught:
            self.run_command('evolve', config=str(config), out=str(self.out))
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('gamma0', str(caught.exception))
        self.assertFalse(self.out.exists())

    def test_missing_document_exits_with_one(self):
        with self.assertRaises(CommandError) as caught:
            self.run_command('evolve', config=str(self.dir / 'absent.json'))
        self.assertEqual(caught.exception.returncode, 1)

    def test_non_positive_workers(self):
        config = self.write_config(self.dir, sweep={'parameter': 'i_in', 'min': 1, 'max': 10, 'count': 2})
        with self.assertRaises(CommandError) as caught:
            self.run_command('sweep', config=str(config), out=str(self.out), workers=-1)
        self.assertEqual(caught.exception.returncode, 1)

    def test_divergence_exits_with_two_after_writing(self):
        config = self.write_config(self.dir)
        partial = Trajectory(np.array([0.0, 0.5]), np.ones((2, 8), dtype=complex), 1, 0.01)
        with mock.patch('breatherlab.experiments.integrate', side_effect=BlowUpError(0.5, 1e13, partial)):
            with self.assertRaises(CommandError) as caught:
                self.run_command('evolve', config=str(config), out=str(self.out))
        self.assertEqual(caught.exception.returncode, 2)
        self.assertIn('diverged at t = 0.5', str(caught.exception))
        self.assertTrue((self.out / 'sample-trajectory.csv').exists())

    def test_singular_profile_exits_with_two(self):
        config = self.write_config(self.dir, profile=[GAMMA_S, 1.5, 0.0, 0.0])
        with self.assertRaises(CommandError) as caught:
            self.run_command('spectrum', config=str(config), out=str(self.out))
        self.assertEqual(caught.exception.returncode, 2)

    def test_spectrum_reports_energy(self):
        config = self.write_config(self.dir, n_cells=100)
        output = self.run_command('spectrum', config=str(config), out=str(self.out))
        self.assertIn('E_d = 0.3273268', output)

    def test_creutz_check_reports_deviation(self):
        config = self.write_config(self.dir)
        output = self.run_command('creutz-check', config=str(config), out=str(self.out))
        self.assertIn('max relative deviation', output)

    def test_usage_error_exits_with_one(self):
        from breatherlab.management.commands.evolve import Command

        with mock.patch('sys.stderr', new_callable=StringIO):
            with self.assertRaises(SystemExit) as caught:
                Command().run_from_argv(['manage.py', 'evolve', '--workers', 'many'])
        self.assertEqual(caught.exception.code, 1)

        with mock.patch('sys.stderr', new_callable=StringIO):
            with self.assertRaises(SystemExit) as caught:
                Command().run_from_argv(['manage.py', 'evolve'])
        self.assertEqual(caught.exception.code, 1)


class FiguresCommandTests(TempDirMixin, SimpleTestCase):
    def test_only_selected_entries_run(self):
        config_dir, out = self.make_dir(), self.make_dir()
        self.write_config(config_dir, 'defect-spectrum.json', n_cells=50)
        stdout = StringIO()
        call_command('figures', only=['defect-spectrum', 'defect-states'], config_dir=str(config_dir),
                     out=str(out), stdout=stdout)
        self.assertIn('2 of 2 suite entries succeeded', stdout.getvalue())
        self.assertTrue((out / 'sample-spectrum.csv').exists())
        self.assertTrue((out / 'sample-defect.csv').exists())

    def test_failures_do_not_stop_the_suite(self):
        config_dir, out = self.make_dir(), self.make_dir()
        self.write_config(config_dir, 'defect-spectrum.json', n_cells=50)
        stdout = StringIO()
        with self.assertRaises(CommandError) as caught:
            call_command('figures', only=['decay', 'defect-spectrum'], config_dir=str(config_dir),
                         out=str(out), stdout=stdout)
        self.assertEqual(caught.exception.returncode, 1)
        self.assertIn('decay', str(caught.exception))
        self.assertIn('1 of 2 suite entries succeeded', stdout.getvalue())

    def test_suite_documents_are_bundled(self):
        from django.conf import settings

        for label, command, filename in SUITE:
            with self.subTest(label=label):
                self.assertTrue((settings.BREATHER_LAB['CONFIG_DIR'] / filename).exists())
