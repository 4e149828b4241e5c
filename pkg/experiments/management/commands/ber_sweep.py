from experiments.runners import run_ber_sweep

from ._common import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Analytic and simulated BER against transmit SNR for CI and OAP'
    kind = 'ber_sweep'
    monte_carlo_flag = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--dump-precoders', action='store_true', help='also write the CI precoder matrices')

    def overrides(self, options):
        overrides = super().overrides(options)
        if options.get('dump_precoders'):
            overrides['simulation']['dump_precoders'] = True
        return overrides

    def run(self, config):
        return run_ber_sweep(config)

    def report(self, output):
        for key, crossings in output.summary.items():
            if not key.startswith('snr_at_ber'):
                continue
            for crossing in crossings:
                where = '' if crossing['family_value'] is None else f" at {crossing['family_value']}"
                snr = 'outside the sweep' if crossing['snr_db'] is None else f"{crossing['snr_db']:.2f} dB"
                self.stdout.write(f"  {crossing['scheme']}{where}: {key} {snr}")
        super().report(output)
