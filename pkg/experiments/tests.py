import csv
import enum
import json
import os
import shutil
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pytest
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from precoding.precoders import PrecoderKind

from .config import load_config, load_file, merge
from .factories import ExperimentRunFactory
from .models import ExperimentRun
from .presets import PRESETS, preset
from .runners import run_ber_sweep, run_channel_map, run_mobility, run_throughput_sweep, run_validate
from .writers import format_value, render_csv, write_csv

QUICK = {
    'sweep': {'snr_start': 60.0, 'snr_stop': 64.0, 'snr_step': 2.0},
    'simulation': {'symbols': 20_000, 'block_size': 4096, 'threads': 1},
}


def quick(**sections):
    return merge(QUICK, sections)


def read_rows(path):
    lines = Path(path).read_text(encoding='utf-8').splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


class TestConfig:
    def test_defaults(self):
        config = load_config()
        assert config['transmitters']['count'] == 4
        assert config['transmitters']['spacing'] == 1.0
        assert config['transmitters']['semi_angle'] == 15.0
        assert config['receivers']['area'] == 1e-4
        assert config['noise']['i2'] == 0.562
        layout = config.layout()
        assert layout.transmit_power == pytest.approx(36.0)
        assert config.schemes == [PrecoderKind.CI, PrecoderKind.OAP]

    @pytest.mark.parametrize('raw, key', [
        ({'lights': {'count': 4}}, 'lights'),
        ({'room': {'colour': 'white'}}, 'room'),
        ({'transmitters': {'spacing': -1.0}}, 'transmitters.spacing'),
        ({'transmitters': {'semi_angle': 95.0}}, 'transmitters.semi_angle'),
        ({'transmitters': {'positions': []}}, 'transmitters.positions'),
        ({'transmitters': {'power_per_led': 0.0}}, 'transmitters.power_per_led'),
        ({'room': {'receiver_plane_z': 3.5}}, 'room.receiver_plane_z'),
        ({'receivers': {'filter_gain': 1.5}}, 'receivers.filter_gain'),
        ({'sweep': {'snr_start': 80.0, 'snr_stop': 60.0}}, 'sweep.snr_stop'),
        ({'sweep': {'spacings': [0.5], 'mimo_orders': [2]}}, 'sweep'),
        ({'sweep': {'schemes': ['zf']}}, 'sweep.schemes'),
        ({'simulation': {'early_stop_errors': 10}}, 'simulation.early_stop_errors'),
        ({'csi': {'mobile_users': [4]}}, 'csi.mobile_users'),
        ({'transmitters': {'spacing': 5.0}}, 'transmitters'),
    ])
    def test_rejected(self, raw, key):
        with pytest.raises(ValidationError) as exc:
            load_config(overrides=raw)
        assert key in exc.value.message_dict

    def test_preset_then_file_then_flags(self, tmp_path):
        path = tmp_path / 'fig4.toml'
        path.write_text('[sweep]\nspacings = [0.5, 1.0]\n\n[simulation]\nseed = 9\n', encoding='utf-8')
        config = load_config(path, 'fig4', {'simulation': {'seed': 11}})
        assert config['sweep']['spacings'] == [0.5, 1.0]
        assert config['sweep']['snr_stop'] == PRESETS['fig4']['sweep']['snr_stop']
        assert config.seed == 11
        assert config.preset == 'fig4'

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            load_config(preset_name='fig99')
        with pytest.raises(KeyError):
            preset('fig99')

    def test_json_config(self, tmp_path):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'transmitters': {'count': 2, 'spacing': 0.5}}), encoding='utf-8')
        assert len(load_config(path).layout().luminaires) == 2

    def test_parse_error(self, tmp_path):
        path = tmp_path / 'broken.toml'
        path.write_text('[room\n', encoding='utf-8')
        with pytest.raises(ValidationError):
            load_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / 'absent.toml')

    def test_hash_ignores_threads_and_output(self):
        base = load_config(overrides=QUICK)
        other = load_config(overrides=merge(QUICK, {'simulation': {'threads': 7}, 'output': {'directory': '/x'}}))
        assert base.config_hash == other.config_hash
        reseeded = load_config(overrides=merge(QUICK, {'simulation': {'seed': 2}}))
        assert reseeded.config_hash != base.config_hash

    def test_snr_points(self):
        assert load_config().snr_points() == [50.0 + 2 * k for k in range(16)]
        fine = load_config(overrides={'sweep': {'snr_start': 0.0, 'snr_stop': 1.0, 'snr_step': 0.1}})
        assert len(fine.snr_points()) == 11
        assert fine.snr_points()[3] == 0.3

    def test_families(self):
        config = load_config(preset_name='fig7')
        assert [len(layout.luminaires) for _, _, layout in config.layouts()] == [2, 4, 8]
        config = load_config(preset_name='fig5')
        angles = [layout.luminaires[0].semi_angle_half_power for _, _, layout in config.layouts()]
        assert angles == [15.0, 30.0, 45.0]

    def test_placed_luminaires(self):
        config = load_config(overrides={'transmitters': {'positions': [[1.0, 1.0], [3.0, 3.0]]}})
        layout = config.layout()
        assert config['transmitters']['count'] == 2
        assert layout.detectors[1].position == (3.0, 3.0, 0.75)


class TestWriters:
    class Colour(enum.Enum):
        RED = 'red'

    def test_format(self):
        assert format_value(0.1) == '0.1'
        assert format_value(np.float64(1e-20)) == '1e-20'
        assert format_value(3) == '3'
        assert format_value(None) == ''
        assert format_value(self.Colour.RED) == 'red'
        assert format_value(True) == 'true'

    def test_provenance_header(self):
        text = render_csv(['a', 'b'], [[1, 0.25]], 'abc', 5)
        assert text == '# config_sha256=abc seed=5\na,b\n1,0.25\n'

    def test_replaces_atomically(self, tmp_path):
        path = tmp_path / 'out' / 'r.csv'
        write_csv(path, ['a'], [[1]], 'h', 1)
        write_csv(path, ['a'], [[2]], 'h', 1)
        assert path.read_text().splitlines()[-1] == '2'
        assert [p.name for p in path.parent.iterdir()] == ['r.csv']

    def test_unwritable_target(self, tmp_path):
        blocker = tmp_path / 'file'
        blocker.write_text('')
        with pytest.raises(OSError):
            write_csv(blocker / 'r.csv', ['a'], [[1]], 'h', 1)


class TestRunners:
    def config(self, tmp_path, **sections):
        return load_config(overrides=merge(quick(**sections), {'output': {'directory': str(tmp_path)}}))

    def centre_gain(self, path):
        _, rows = read_rows(path)
        centre = min(rows, key=lambda r: (float(r['x']) - 2.0) ** 2 + (float(r['y']) - 2.0) ** 2)
        return float(centre['gain'])

    def test_channel_map_lobes(self, tmp_path):
        close = run_channel_map(self.config(tmp_path / 'a', transmitters={'spacing': 0.5}, sweep={'grid_resolution': 0.1}))
        wide = run_channel_map(self.config(tmp_path / 'c', transmitters={'spacing': 2.0}, sweep={'grid_resolution': 0.1}))
        assert self.centre_gain(close.paths[0]) > 0
        assert self.centre_gain(wide.paths[0]) == 0.0
        meta = json.loads(Path(close.paths[1]).read_text())
        assert meta['grid_shape'] == [40, 40]
        assert meta['peak']['gain'] == pytest.approx(close.summary['peak_gain'])

    def test_ber_sweep_rows(self, tmp_path):
        output = run_ber_sweep(self.config(tmp_path, simulation={'monte_carlo': False}))
        header, rows = read_rows(output.paths[0])
        assert header.startswith('# config_sha256=')
        assert len(rows) == 6
        assert {r['scheme'] for r in rows} == {'ci', 'oap'}
        assert all(r['mc_ber'] == '' for r in rows)
        ci = [float(r['ber_avg']) for r in rows if r['scheme'] == 'ci']
        assert ci[0] > ci[1] > ci[2]
        meta = json.loads(Path(output.paths[1]).read_text())
        assert meta['config']['sweep']['snr_step'] == 2.0
        assert len(meta['sinr'][0]['points']) == 3

    def test_ber_sweep_simulates(self, tmp_path):
        output = run_ber_sweep(self.config(tmp_path))
        _, rows = read_rows(output.paths[0])
        assert all(int(r['symbols']) == 20_000 for r in rows)
        assert all(0.0 <= float(r['mc_ber']) <= 0.5 for r in rows)

    def test_crossing_reported(self, tmp_path):
        """Ordering only; DESIGN.md, "Measured behaviour", has the measured gap"""
        config = self.config(tmp_path, sweep={'snr_start': 60.0, 'snr_stop': 90.0, 'snr_step': 10.0},
                             simulation={'monte_carlo': False})
        crossings = run_ber_sweep(config).summary['snr_at_ber_0.001']
        by_scheme = {c['scheme']: c['snr_db'] for c in crossings}
        assert by_scheme['oap'] < by_scheme['ci']

    def test_precoder_dump(self, tmp_path):
        output = run_ber_sweep(self.config(tmp_path, simulation={'monte_carlo': False, 'dump_precoders': True}))
        assert (tmp_path / 'precoder.csv') in output.paths

    def test_throughput_grows_with_users(self, tmp_path):
        config = self.config(tmp_path, transmitters={'spacing': 0.5},
                             sweep={'mimo_orders': [2, 4], 'snr_start': 60.0, 'snr_stop': 60.0})
        _, rows = read_rows(run_throughput_sweep(config).paths[0])
        value = {(r['scheme'], r['family_value']): float(r['throughput']) for r in rows}
        for scheme in ('ci', 'oap'):
            assert value[(scheme, '4')] > value[(scheme, '2')]

    def test_standing_user_matches_perfect_csi(self, tmp_path):
        config = self.config(tmp_path, mobility={'velocity': 0.0, 'elapsed_times': [0.1]})
        output = run_mobility(config)
        _, rows = read_rows(output.paths[0])
        perfect = [r for r in rows if r['csi_mode'] == 'perfect']
        stale = [r for r in rows if r['csi_mode'] == 'outdated']
        assert [(r['scheme'], r['snr_db'], r['mc_ber']) for r in perfect] == [
            (r['scheme'], r['snr_db'], r['mc_ber']) for r in stale
        ]
        for a, b in zip(perfect, stale):
            assert float(b['ber_avg']) == pytest.approx(float(a['ber_avg']), rel=1e-9)
        assert output.summary['bounds'][1]['error_bound'] == 0.0

    def test_moving_user_bounds(self, tmp_path):
        config = self.config(tmp_path, mobility={'velocity': 1.0, 'elapsed_times': [0.05, 0.2]},
                             simulation={'monte_carlo': False})
        bounds = run_mobility(config).summary['bounds']
        assert 0.0 < bounds[1]['error_bound'] < bounds[2]['error_bound']

    def test_validate(self):
        report = run_validate(load_config(preset_name='fig7')).summary
        assert [c['ci_noiseless_errors'] for c in report['channels']] == [0, 0, 0]
        assert [c['oap_noiseless_errors'] for c in report['channels']] == [0, 0, 0]


class ExperimentRunTest(TestCase):
    def test_lifecycle(self):
        run = ExperimentRunFactory()
        assert run.status == 'running'
        assert run.duration is None
        run.mark_completed(['/tmp/a.csv'])
        run.refresh_from_db()
        assert run.status == 'completed'
        assert run.output_paths == ['/tmp/a.csv']
        assert run.duration is not None
        assert 'fig4' in str(run)

    def test_failure(self):
        run = ExperimentRunFactory(preset='')
        run.mark_failed('boom')
        run.refresh_from_db()
        assert run.status == 'failed'
        assert run.error_message == 'boom'

    def test_database_comes_from_url(self):
        database = settings.DATABASES['default']
        assert database['CONN_MAX_AGE'] == 600
        if 'DATABASE_URL' not in os.environ:
            assert database['ENGINE'] == 'django.db.backends.sqlite3'


class CommandTest(TestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp)

    def write_config(self, text, name='run.toml'):
        path = self.tmp / name
        path.write_text(text, encoding='utf-8')
        return str(path)

    def call(self, name, *args):
        out = StringIO()
        call_command(name, *args, stdout=out)
        return out.getvalue()

    def quick_config(self):
        return self.write_config(
            '[sweep]\nsnr_start = 62.0\nsnr_stop = 66.0\n\n'
            '[simulation]\nsymbols = 20000\nblock_size = 2048\n'
        )

    def test_ber_sweep_is_reproducible_across_threads(self):
        config = self.quick_config()
        self.call('ber_sweep', '--config', config, '--out', str(self.tmp / 'one'), '--threads', '1')
        self.call('ber_sweep', '--config', config, '--out', str(self.tmp / 'four'), '--threads', '4')
        first = (self.tmp / 'one' / 'ber_sweep.csv').read_bytes()
        assert first == (self.tmp / 'four' / 'ber_sweep.csv').read_bytes()
        assert ExperimentRun.objects.filter(kind='ber_sweep', status='completed').count() == 2

    def test_seed_flag(self):
        config = self.quick_config()
        self.call('ber_sweep', '--config', config, '--out', str(self.tmp / 'a'), '--seed', '3')
        header = (self.tmp / 'a' / 'ber_sweep.csv').read_text().splitlines()[0]
        assert header.endswith('seed=3')

    def test_channel_map_preset(self):
        out = self.call('channel_map', '--preset', 'fig3a', '--out', str(self.tmp))
        assert 'channel_map finished' in out
        assert (self.tmp / 'channel_map.csv').exists()

    def test_throughput_and_mobility(self):
        config = self.quick_config()
        self.call('throughput_sweep', '--config', config, '--out', str(self.tmp))
        self.call('mobility', '--config', config, '--out', str(self.tmp), '--no-monte-carlo')
        assert (self.tmp / 'throughput_sweep.csv').exists()
        assert (self.tmp / 'mobility.json').exists()

    def test_validate_prints_config(self):
        out = self.call('validate', '--config', self.quick_config())
        assert '"snr_start": 62.0' in out
        assert 'noiseless errors ci=0 oap=0' in out

    def test_config_error(self):
        config = self.write_config('[transmitters]\nspacing = -1.0\n')
        with self.assertRaises(CommandError) as exc:
            self.call('validate', '--config', config)
        assert exc.exception.returncode == 2
        assert not ExperimentRun.objects.exists()

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as exc:
            self.call('validate', '--config', str(self.tmp / 'absent.toml'))
        assert exc.exception.returncode == 4
        assert 'absent.toml' in str(exc.exception)

    def test_singular_channel(self):
        config = self.write_config('[transmitters]\npositions = [[2.0, 2.0], [2.0, 2.0]]\n')
        with self.assertRaises(CommandError) as exc:
            self.call('ber_sweep', '--config', config, '--out', str(self.tmp), '--no-monte-carlo')
        assert exc.exception.returncode == 3
        assert ExperimentRun.objects.get().status == 'failed'

    def test_unwritable_output(self):
        blocker = self.tmp / 'blocker'
        blocker.write_text('')
        with self.assertRaises(CommandError) as exc:
            self.call('channel_map', '--preset', 'fig3b', '--out', str(blocker / 'sub'))
        assert exc.exception.returncode == 4
