from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Sweep one parameter and tabulate averages, periods and the static-model period'
    task = 'sweep'

    def report(self, record):
        super().report(record)
        failed = record.summary.get('blown_up_points', 0)
        if failed:
            self.stdout.write(
                self.style.WARNING(f'Warning: {failed} sweep points diverged')
            )
