"""
Management command that runs the whole reproduction suite.

Each entry pairs a subcommand with one of the bundled experiment documents
in BREATHER_LAB['CONFIG_DIR']; entries run one after another and a failure
does not stop the rest.
"""
import logging
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

logger = logging.getLogger(__name__)

SUITE = (
    ('decay', 'evolve', 'decay.json'),
    ('steady-end-mode', 'evolve', 'steady-end-mode.json'),
    ('breather', 'evolve', 'breather.json'),
    ('intensity-sweep', 'sweep', 'intensity-sweep.json'),
    ('defect-spectrum', 'spectrum', 'defect-spectrum.json'),
    ('defect-states', 'defect', 'defect-spectrum.json'),
    ('hermitian-plateau', 'hermitian-compare', 'hermitian-plateau.json'),
    ('hermitian-sweep', 'sweep', 'hermitian-sweep.json'),
    ('creutz-equivalence', 'creutz-check', 'creutz-equivalence.json'),
)


class Command(BaseCommand):
    help = 'Run every bundled experiment (evolutions, sweeps, spectra, comparisons)'

    def add_arguments(self, parser):
        parser.add_argument(
            '--out',
            help='Output directory (default: BREATHER_LAB["OUTPUT_DIR"])'
        )
        parser.add_argument(
            '--workers',
            type=int,
            help='Worker processes for the sweeps'
        )
        parser.add_argument(
            '--only',
            nargs='*',
            choices=[entry[0] for entry in SUITE],
            help='Run only these entries'
        )
        parser.add_argument(
            '--config-dir',
            help='Directory holding the experiment documents (default: BREATHER_LAB["CONFIG_DIR"])'
        )

    def handle(self, *args, **options):
        config_dir = Path(options.get('config_dir') or settings.BREATHER_LAB['CONFIG_DIR'])
        selected = options.get('only')
        entries = [entry for entry in SUITE if not selected or entry[0] in selected]
        logger.info(f"Running {len(entries)} suite entries from {config_dir}")

        successful = 0
        failures = []
        for label, command, filename in entries:
            self.stdout.write(f'Running {label} ({command} {filename})')
            kwargs = {'config': str(config_dir / filename), 'stdout': self.stdout}
            if options.get('out'):
                kwargs['out'] = options['out']
            if options.get('workers'):
                kwargs['workers'] = options['workers']
            try:
                call_command(command, **kwargs)
                successful += 1
            except CommandError as e:
                failures.append((label, e.returncode))
                logger.error(f"Suite entry {label} failed: {e}")
                self.stdout.write(self.style.ERROR(f'  {label} failed: {e}'))

        summary_msg = f'Completed! {successful} of {len(entries)} suite entries succeeded'
        logger.info(summary_msg)
        self.stdout.write(self.style.SUCCESS(f'\n{summary_msg}'))

        if failures:
            names = ', '.join(label for label, _ in failures)
            raise CommandError(
                f'{len(failures)} suite entries failed: {names}',
                returncode=max(code for _, code in failures),
            )
