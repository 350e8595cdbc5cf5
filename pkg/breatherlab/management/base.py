"""
Shared plumbing for the experiment commands.

Every subcommand reads one JSON experiment document, runs a single task and
writes its CSV/SVG files. Exit codes: 0 on success, 1 for usage,
configuration and domain errors, 2 for numerical failures (including a run
that diverged but still wrote partial outputs).
"""
import logging
import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from breatherlab.config import parse_config
from breatherlab.exceptions import ConfigError, DomainError, NumericalError
from breatherlab.experiments import run_experiment

logger = logging.getLogger(__name__)

EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class ExperimentCommand(BaseCommand):
    task = None

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='Path to the JSON experiment document'
        )
        parser.add_argument(
            '--out',
            help='Output directory (default: BREATHER_LAB["OUTPUT_DIR"])'
        )
        parser.add_argument(
            '--workers',
            type=int,
            help='Worker processes for sweeps (default: $BREATHER_LAB_WORKERS or CPU count)'
        )
        parser.add_argument(
            '--dt',
            type=float,
            help='Override the document\'s RK4 step'
        )
        parser.add_argument(
            '--tfinal',
            type=float,
            help='Override the document\'s final time'
        )

    def run_from_argv(self, argv):
        # argparse exits with 2 on bad usage; this CLI reserves 2 for numerical failures
        self._called_from_command_line = True
        parser = self.create_parser(argv[0], argv[1])
        try:
            parser.parse_args(argv[2:])
        except SystemExit as exc:
            if exc.code:
                sys.exit(EXIT_INPUT)
            raise
        super().run_from_argv(argv)

    def load_config(self, options):
        path = Path(options['config'])
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise CommandError(f'Cannot read config {path}: {e}', returncode=EXIT_INPUT)
        overrides = {'dt': options.get('dt'), 't_final': options.get('tfinal')}
        return parse_config(text, overrides)

    def resolve_workers(self, options) -> int:
        workers = options.get('workers') or settings.BREATHER_LAB['WORKERS']
        if workers < 1:
            raise CommandError(f'--workers must be positive, got {workers}', returncode=EXIT_INPUT)
        return workers

    def handle(self, *args, **options):
        logger.info(f"Starting {self.task} with config {options['config']}")
        try:
            config = self.load_config(options)
            record = run_experiment(
                config,
                task=self.task,
                out_dir=options.get('out'),
                workers=self.resolve_workers(options),
            )
        except ConfigError as e:
            logger.error(f"Invalid experiment document: {e}")
            raise CommandError(f'Invalid config: {e}', returncode=EXIT_INPUT)
        except DomainError as e:
            logger.error(f"Parameter outside the model's domain: {e}")
            raise CommandError(str(e), returncode=EXIT_INPUT)
        except NumericalError as e:
            logger.exception(f"Numerical failure in {self.task}")
            raise CommandError(f'Numerical failure: {e}', returncode=EXIT_NUMERICAL)
        except OSError as e:
            logger.error(f"Could not write outputs: {e}")
            raise CommandError(f'I/O error: {e}', returncode=EXIT_INPUT)

        self.report(record)
        if record.blew_up:
            when = f' at t = {record.blow_up_time:.6g}' if record.blow_up_time is not None else ''
            raise CommandError(
                f"'{config.name}' diverged{when}; partial outputs written to {record.out_dir}",
                returncode=EXIT_NUMERICAL,
            )

    def report(self, record):
        for name, paths in record.files.items():
            for path in paths:
                self.stdout.write(f'  {name}: {path}')
        self.stdout.write(
            self.style.SUCCESS(
                f"Completed {record.task} for '{record.config.name}' in {record.duration:.2f}s "
                f"({sum(len(p) for p in record.files.values())} files)"
            )
        )
