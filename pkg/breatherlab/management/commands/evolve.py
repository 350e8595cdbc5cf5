from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Integrate one lattice run from the single-site input and write the requested outputs'
    task = 'evolve'

    def report(self, record):
        super().report(record)
        fraction = record.summary.get('edge_fraction')
        if fraction is not None:
            self.stdout.write(f'  edge fraction I_1/I over {record.config.window}: {fraction:.6g}')
        period = record.summary.get('period')
        if period is not None:
            self.stdout.write(f'  breather period: {period:.6g}')
