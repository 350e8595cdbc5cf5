from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Eigenvalues of the static linear model for a gamma profile, with in-gap flags'
    task = 'spectrum'

    def report(self, record):
        super().report(record)
        e_d = record.summary.get('e_d')
        if e_d is None:
            self.stdout.write('  no in-gap defect state')
        else:
            self.stdout.write(f'  E_d = {e_d:.12g}, T_d = {record.summary["linear_period"]:.12g}')
