import factory

from .models import ExperimentRun


class ExperimentRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ExperimentRun

    kind = 'ber_sweep'
    preset = 'fig4'
    config_hash = factory.Sequence(lambda n: f'{n:064x}')
    seed = '1'
    parameters = factory.LazyFunction(lambda: {'simulation': {'seed': 1}})
