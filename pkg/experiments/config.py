"""
Experiment configuration: TOML (or JSON) files merged over a named preset,
validated section by section, and turned into the objects the simulator
works with.
"""
import copy
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 backport
    import tomli as tomllib

from django.conf import settings
from django.core.exceptions import ValidationError

from channel.layout import Luminaire, PhotoDetector, RoomLayout, grid_layout
from core.exceptions import DomainError
from csi.estimates import PerturbationModel, SignPolicy
from montecarlo.engine import CsiSettings, CsiState, SimConfig, ThresholdMode
from noise.variances import NoiseModel, NoiseParams
from precoding.precoders import PrecoderKind

from .forms import SECTION_FORMS
from .presets import preset

logger = logging.getLogger(__name__)

FAMILY_KEYS = {'spacings': 'spacing', 'semi_angles': 'semi_angle', 'mimo_orders': 'mimo_order'}


def load_file(path):
    """Raw nested dict from a ``.toml`` or ``.json`` file; OSError propagates"""
    path = Path(path)
    raw = path.read_bytes()
    try:
        if path.suffix.lower() == '.json':
            data = json.loads(raw.decode('utf-8'))
        else:
            data = tomllib.loads(raw.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ValidationError(f'{path}: {exc}', code='parse') from exc
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise ValidationError(f'{path}: expected tables of key/value pairs at the top level', code='parse')
    return data


def merge(*configs):
    """Section-wise merge; later configs win key by key"""
    merged = {}
    for config in configs:
        for section, values in (config or {}).items():
            merged.setdefault(section, {}).update(values)
    return merged


def _form_errors(section, form):
    errors = {}
    for name, messages in form.errors.items():
        key = section if name == '__all__' else f'{section}.{name}'
        errors[key] = list(messages)
    return errors


def resolve(raw, preset_name='', source=''):
    """Validate every section and return the resolved ExperimentConfig"""
    errors = {}
    sections = {}
    for section in sorted(set(raw) - set(SECTION_FORMS)):
        errors[section] = [f'Unknown section "{section}".']
    for section, form_class in SECTION_FORMS.items():
        form = form_class(raw.get(section))
        if form.is_valid():
            sections[section] = form.cleaned_data
        else:
            errors.update(_form_errors(section, form))
    if errors:
        raise ValidationError(errors)

    config = ExperimentConfig(sections=sections, preset=preset_name or '', source=str(source or ''))
    config.check()
    return config


def load_config(path=None, preset_name=None, overrides=None):
    """Preset, then file, then overrides (command-line flags)"""
    layers = []
    if preset_name:
        try:
            layers.append(preset(preset_name))
        except KeyError as exc:
            raise ValidationError(str(exc.args[0]), code='preset') from exc
    if path:
        layers.append(load_file(path))
    layers.append(overrides or {})
    return resolve(merge(*layers), preset_name=preset_name, source=path)


@dataclass(frozen=True)
class ExperimentConfig:
    sections: dict
    preset: str = ''
    source: str = ''

    def __getitem__(self, section):
        return self.sections[section]

    def as_dict(self):
        return copy.deepcopy(self.sections)

    def hashed_sections(self):
        """Everything that can change a result; thread count and output paths cannot"""
        hashed = self.as_dict()
        hashed.pop('output', None)
        hashed['simulation'].pop('threads', None)
        return hashed

    @property
    def config_hash(self):
        canonical = json.dumps(self.hashed_sections(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    @property
    def seed(self):
        return self['simulation']['seed']

    @property
    def threads(self):
        return self['simulation']['threads']

    @property
    def monte_carlo(self):
        return self['simulation']['monte_carlo']

    @property
    def schemes(self):
        return [PrecoderKind(s) for s in self['sweep']['schemes']]

    @property
    def output_dir(self):
        return Path(self['output']['directory'] or settings.SIMULATION_OUTPUT_DIR)

    def output_path(self, name):
        return self.output_dir / f"{self['output']['prefix']}{name}"

    def family(self):
        """(family name, values) of the swept layout family, or (None, [None])"""
        for key, name in FAMILY_KEYS.items():
            if self['sweep'][key]:
                return name, list(self['sweep'][key])
        return None, [None]

    def layout(self, count=None, spacing=None, semi_angle=None):
        room, tx, rx = self['room'], self['transmitters'], self['receivers']
        height = room['z'] if tx['height'] is None else tx['height']
        luminaire = {
            'semi_angle_half_power': tx['semi_angle'] if semi_angle is None else semi_angle,
            'leds_per_luminaire': tx['leds_per_luminaire'],
            'power_per_led': tx['power_per_led'],
        }
        detector = {name: rx[name] for name in ('area', 'fov', 'responsivity', 'refractive_index', 'filter_gain')}

        if tx['positions'] and count is None and spacing is None:
            positions = tx['positions']
            return RoomLayout(
                room_x=room['x'],
                room_y=room['y'],
                room_z=room['z'],
                receiver_plane_z=room['receiver_plane_z'],
                luminaires=[Luminaire(position=(x, y, height), **luminaire) for x, y in positions],
                detectors=[PhotoDetector(position=(x, y, room['receiver_plane_z']), **detector) for x, y in positions],
                label=f'{len(positions)} placed luminaires',
            )
        return grid_layout(
            tx['count'] if count is None else count,
            tx['spacing'] if spacing is None else spacing,
            room=(room['x'], room['y'], room['z']),
            receiver_plane_z=room['receiver_plane_z'],
            luminaire_height=height,
            luminaire=luminaire,
            detector=detector,
        )

    def layouts(self):
        """(family, value, layout) for every member of the swept family"""
        family, values = self.family()
        out = []
        for value in values:
            if family == 'mimo_order':
                layout = self.layout(count=value)
            elif family == 'spacing':
                layout = self.layout(spacing=value)
            elif family == 'semi_angle':
                layout = self.layout(semi_angle=value)
            else:
                layout = self.layout()
            out.append((family, value, layout))
        return out

    def snr_points(self):
        sweep = self['sweep']
        count = math.floor((sweep['snr_stop'] - sweep['snr_start']) / sweep['snr_step'] + 1e-9) + 1
        return [round(sweep['snr_start'] + k * sweep['snr_step'], 9) for k in range(count)]

    @property
    def is_physical(self):
        return self['noise']['mode'] == 'physical'

    def noise_params(self):
        names = {f.name for f in fields(NoiseParams)}
        return NoiseParams(**{k: v for k, v in self['noise'].items() if k in names})

    def noise_model(self, layout, snr_db=None):
        if self.is_physical:
            areas = [pd.area for pd in layout.detectors]
            return NoiseModel.physical(self.noise_params(), layout.responsivity, areas)
        return NoiseModel.swept(snr_db, layout.responsivity, layout.transmit_power)

    def csi_settings(self, bound=None, model=None, mode=None):
        csi = self['csi']
        return CsiSettings(
            mode=CsiState(mode or csi['mode']),
            model=PerturbationModel(model or csi['model']),
            bound=csi['bound'] if bound is None else bound,
            mobile_users=tuple(csi['mobile_users']),
            sign=SignPolicy(csi['sign']),
        )

    def sim_config(self, scheme, layout, noise=None, csi=None):
        simulation, sweep = self['simulation'], self['sweep']
        return SimConfig(
            n_symbols=simulation['symbols'],
            seed=simulation['seed'],
            scheme=PrecoderKind(scheme),
            csi=csi or self.csi_settings(),
            noise=noise or NoiseModel.noiseless(),
            threshold=ThresholdMode(sweep['threshold']),
            early_stop_errors=simulation['early_stop_errors'],
            block_size=simulation['block_size'],
            threads=simulation['threads'],
            renormalize_oap=sweep['renormalize_oap'],
            responsivity=layout.responsivity,
            power=layout.transmit_power,
            energy_checks=settings.SIMULATION_ENERGY_CHECKS,
            tolerance=simulation['tolerance'],
        )

    def check(self):
        """Cross-section checks that need the built layouts"""
        errors = {}
        try:
            layouts = self.layouts()
        except DomainError as exc:
            raise ValidationError({'transmitters': [str(exc)]}) from exc
        users = min(len(layout.detectors) for _, _, layout in layouts)
        if any(u >= users for u in self['csi']['mobile_users']):
            errors['csi.mobile_users'] = [f'Mobile users must be below {users}.']
        if self['mobility']['user'] >= users:
            errors['mobility.user'] = [f'The moving user must be below {users}.']
        if errors:
            raise ValidationError(errors)
        logger.debug('resolved config %s (%d layouts)', self.config_hash[:12], len(layouts))
