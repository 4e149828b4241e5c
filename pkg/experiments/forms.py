"""
One form per experiment-config section.

A section form is bound to the section's key/value table merged over the
field defaults, so ``cleaned_data`` is the fully resolved section. Keys the
form does not know are reported as errors.
"""
from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from precoding.codebook import MAX_USERS


class ListField(forms.Field):
    """A list (TOML array) whose items are cleaned by ``base_field``"""

    def __init__(self, base_field, min_length=0, length=None, **kwargs):
        self.base_field = base_field
        self.min_length = min_length
        self.length = length
        super().__init__(**kwargs)

    def to_python(self, value):
        if value is None:
            return None
        if not isinstance(value, (list, tuple)):
            raise ValidationError('Expected a list, got %(value)r.', params={'value': value})
        items, errors = [], []
        for index, item in enumerate(value):
            try:
                items.append(self.base_field.clean(item))
            except ValidationError as exc:
                errors.extend(f'item {index}: {message}' for message in exc.messages)
        if errors:
            raise ValidationError(errors)
        return items

    def validate(self, value):
        if value is None:
            if self.required:
                raise ValidationError(self.error_messages['required'], code='required')
            return
        if len(value) < self.min_length:
            raise ValidationError(f'Needs at least {self.min_length} item(s).')
        if self.length is not None and len(value) != self.length:
            raise ValidationError(f'Needs exactly {self.length} items.')


def positive(value):
    if not value > 0:
        raise ValidationError('Must be strictly positive.')


def positive_float(**kwargs):
    return forms.FloatField(validators=[positive], **kwargs)


class SectionForm(forms.Form):
    """Merges the section over the field defaults and rejects unknown keys"""

    def __init__(self, data=None, **kwargs):
        data = dict(data or {})
        self.unknown_keys = sorted(set(data) - set(self.base_fields))
        resolved = {}
        for name, field in self.base_fields.items():
            initial = field.initial() if callable(field.initial) else field.initial
            resolved[name] = data.get(name, initial)
        super().__init__(resolved, **kwargs)

    def clean(self):
        cleaned_data = super().clean()
        for key in self.unknown_keys:
            self.add_error(None, f'Unknown key "{key}".')
        return cleaned_data


class RoomForm(SectionForm):
    x = forms.FloatField(min_value=0.5, max_value=100.0, initial=4.0)
    y = forms.FloatField(min_value=0.5, max_value=100.0, initial=4.0)
    z = forms.FloatField(min_value=0.5, max_value=20.0, initial=3.0)
    receiver_plane_z = forms.FloatField(min_value=0.0, initial=0.75)

    def clean(self):
        cleaned_data = super().clean()
        plane, height = cleaned_data.get('receiver_plane_z'), cleaned_data.get('z')
        if plane is not None and height is not None and plane >= height:
            self.add_error('receiver_plane_z', 'The receiver plane must be below the ceiling.')
        return cleaned_data


class TransmittersForm(SectionForm):
    count = forms.IntegerField(min_value=1, max_value=MAX_USERS, initial=4)
    spacing = positive_float(initial=1.0)
    height = forms.FloatField(required=False, initial=None)
    semi_angle = forms.FloatField(min_value=0.1, max_value=89.9, initial=15.0)
    leds_per_luminaire = forms.IntegerField(min_value=1, initial=3600)
    power_per_led = positive_float(initial=0.01)
    positions = ListField(ListField(forms.FloatField(), length=2), required=False, initial=None)

    def clean_positions(self):
        positions = self.cleaned_data.get('positions')
        if positions is not None and not positions:
            raise ValidationError('The luminaire list is empty.')
        if positions is not None and len(positions) > MAX_USERS:
            raise ValidationError(f'At most {MAX_USERS} luminaires are supported.')
        return positions

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('positions'):
            cleaned_data['count'] = len(cleaned_data['positions'])
        return cleaned_data


class ReceiversForm(SectionForm):
    area = positive_float(initial=1e-4)
    fov = forms.FloatField(min_value=0.1, max_value=90.0, initial=15.0)
    responsivity = positive_float(initial=1.0)
    refractive_index = forms.FloatField(min_value=1.0, initial=1.5)
    filter_gain = forms.FloatField(validators=[positive], max_value=1.0, initial=1.0)


class NoiseForm(SectionForm):
    mode = forms.ChoiceField(choices=[('swept', 'Swept transmit SNR'), ('physical', 'Shot and thermal')],
                             initial='swept')
    bandwidth = positive_float(initial=1e8)
    i_bg = positive_float(initial=1e-4)
    i2 = positive_float(initial=0.562)
    i3 = positive_float(initial=0.0868)
    temperature = positive_float(initial=295.0)
    open_loop_gain = positive_float(initial=10.0)
    capacitance_per_area = positive_float(initial=1.12e-6)
    fet_noise_factor = positive_float(initial=1.5)
    fet_transconductance = positive_float(initial=0.03)


SCHEMES = [('ci', 'Channel inversion'), ('oap', 'Optical adaptive precoding')]
FAMILIES = ('spacings', 'semi_angles', 'mimo_orders')


class SweepForm(SectionForm):
    snr_start = forms.FloatField(min_value=-50.0, max_value=250.0, initial=50.0)
    snr_stop = forms.FloatField(min_value=-50.0, max_value=250.0, initial=80.0)
    snr_step = positive_float(initial=2.0)
    schemes = ListField(forms.ChoiceField(choices=SCHEMES), min_length=1, initial=['ci', 'oap'])
    spacings = ListField(positive_float(), initial=[])
    semi_angles = ListField(forms.FloatField(min_value=0.1, max_value=89.9), initial=[])
    mimo_orders = ListField(forms.IntegerField(min_value=1, max_value=MAX_USERS), initial=[])
    target_ber = forms.FloatField(validators=[positive], max_value=0.499, initial=1e-3)
    grid_resolution = positive_float(initial=0.05)
    threshold = forms.ChoiceField(choices=[('genie', 'Genie'), ('fixed', 'Fixed')], initial='genie')
    renormalize_oap = forms.BooleanField(required=False, initial=False)

    def clean(self):
        cleaned_data = super().clean()
        start, stop = cleaned_data.get('snr_start'), cleaned_data.get('snr_stop')
        if start is not None and stop is not None and stop < start:
            self.add_error('snr_stop', 'The sweep must not end below its start.')
        families = [name for name in FAMILIES if cleaned_data.get(name)]
        if len(families) > 1:
            self.add_error(None, f'Sweep at most one family at a time, got {", ".join(families)}.')
        return cleaned_data


class CsiForm(SectionForm):
    mode = forms.ChoiceField(choices=[('perfect', 'Perfect'), ('outdated', 'Outdated')], initial='perfect')
    model = forms.ChoiceField(choices=[('worst_case', 'Worst case'), ('uniform', 'Uniform')], initial='worst_case')
    bound = forms.FloatField(min_value=0.0, initial=0.0)
    mobile_users = ListField(forms.IntegerField(min_value=0), initial=[0])
    sign = forms.ChoiceField(choices=[('pessimistic', 'Pessimistic'), ('plus', 'Plus'), ('minus', 'Minus')],
                             initial='pessimistic')


class MobilityForm(SectionForm):
    velocity = forms.FloatField(min_value=0.0, max_value=10.0, initial=1.0)
    elapsed_times = ListField(positive_float(), min_length=1, initial=[0.05, 0.1, 0.2])
    heading = ListField(forms.FloatField(), length=2, initial=[1.0, 0.0])
    user = forms.IntegerField(min_value=0, initial=0)
    model = forms.ChoiceField(choices=[('worst_case', 'Worst case'), ('uniform', 'Uniform')], initial='uniform')

    def clean_heading(self):
        heading = self.cleaned_data.get('heading')
        if heading and not any(heading):
            raise ValidationError('The heading must be a non-zero vector.')
        return heading


class SimulationForm(SectionForm):
    symbols = forms.IntegerField(min_value=1, initial=lambda: settings.SIMULATION_DEFAULT_SYMBOLS)
    seed = forms.IntegerField(min_value=0, max_value=2 ** 64 - 1, initial=lambda: settings.SIMULATION_DEFAULT_SEED)
    threads = forms.IntegerField(min_value=0, initial=lambda: settings.SIMULATION_THREADS)
    block_size = forms.IntegerField(min_value=1, initial=lambda: settings.SIMULATION_BLOCK_SIZE)
    early_stop_errors = forms.IntegerField(min_value=100, required=False, initial=None)
    monte_carlo = forms.BooleanField(required=False, initial=True)
    dump_precoders = forms.BooleanField(required=False, initial=False)
    tolerance = positive_float(initial=lambda: settings.SIMULATION_PINV_TOLERANCE)


class OutputForm(SectionForm):
    directory = forms.CharField(required=False, initial=lambda: str(settings.SIMULATION_OUTPUT_DIR))
    prefix = forms.CharField(required=False, initial='')


SECTION_FORMS = {
    'room': RoomForm,
    'transmitters': TransmittersForm,
    'receivers': ReceiversForm,
    'noise': NoiseForm,
    'sweep': SweepForm,
    'csi': CsiForm,
    'mobility': MobilityForm,
    'simulation': SimulationForm,
    'output': OutputForm,
}
