from experiments.runners import run_mobility

from ._common import ExperimentCommand


class Command(ExperimentCommand):
    help = 'BER under outdated CSI for a user moving between channel updates'
    kind = 'mobility'
    monte_carlo_flag = True

    def run(self, config):
        return run_mobility(config)

    def report(self, output):
        for entry in output.summary['bounds']:
            self.stdout.write(f"  t={entry['elapsed_time']:g} s: error bound {entry['error_bound']:.3e}")
        super().report(output)
