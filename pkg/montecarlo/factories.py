import factory

from noise.variances import NoiseModel
from precoding.precoders import PrecoderKind

from .engine import CsiSettings, SimConfig, ThresholdMode


class CsiSettingsFactory(factory.Factory):
    class Meta:
        model = CsiSettings


class SimConfigFactory(factory.Factory):
    """Short single-threaded run over the 36 W luminaires, noise off"""

    class Meta:
        model = SimConfig

    n_symbols = 20_000
    seed = 1
    scheme = PrecoderKind.CI
    csi = factory.SubFactory(CsiSettingsFactory)
    noise = factory.LazyFunction(NoiseModel.noiseless)
    threshold = ThresholdMode.GENIE
    block_size = 4096
    threads = 1
    responsivity = 1.0
    power = 36.0
    energy_checks = True
