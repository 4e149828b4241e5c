from experiments.runners import run_channel_map

from ._common import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Writes the total LOS gain over the receiver plane'
    kind = 'channel_map'

    def run(self, config):
        return run_channel_map(config)

    def report(self, output):
        self.stdout.write(f"  peak gain {output.summary['peak_gain']:.4g} for {output.summary['layout']}")
        super().report(output)
