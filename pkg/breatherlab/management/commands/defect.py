from breatherlab.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Closed-form defect states, thresholds and Rabi weights, checked against the eigensolver'
    task = 'defect'
