import json

from experiments.runners import run_validate
from experiments.writers import format_value

from ._common import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Validates a config, prints it resolved and runs the noiseless self-check'
    kind = 'validate'

    def run(self, config):
        return run_validate(config)

    def report(self, output):
        self.stdout.write(json.dumps(output.summary['config'], indent=2, sort_keys=True, default=format_value))
        for channel in output.summary['channels']:
            self.stdout.write(
                f"  {channel['layout']}: condition number {channel['condition_number']:.4g}, "
                f"noiseless errors ci={channel['ci_noiseless_errors']} oap={channel['oap_noiseless_errors']}"
            )
