from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Evolve the lattice and its Creutz-ladder image side by side and report the intensity deviation'
    task = 'creutz-check'

    def report(self, record):
        super().report(record)
        deviation = record.summary.get('max_deviation')
        if deviation is not None:
            self.stdout.write(f'  max relative deviation: {deviation:.3e}')
