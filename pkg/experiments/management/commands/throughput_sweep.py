from experiments.runners import run_throughput_sweep

from ._common import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Normalised sum throughput against transmit SNR for CI and OAP'
    kind = 'throughput_sweep'

    def run(self, config):
        return run_throughput_sweep(config)
