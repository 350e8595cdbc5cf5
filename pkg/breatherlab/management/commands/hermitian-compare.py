from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run the reciprocal model against the breather (reference block) and compare their end states'
    task = 'hermitian-compare'

    def report(self, record):
        super().report(record)
        summary = record.summary
        if 'plateau_hermitian' in summary:
            self.stdout.write(
                f"  plateau metric: hermitian {summary['plateau_hermitian']:.4g}, "
                f"breather {summary['plateau_breather']:.4g}"
            )
