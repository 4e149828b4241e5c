"""
The experiments behind the management commands. Each runner takes a
resolved ExperimentConfig, writes its result files and returns what it
wrote together with a short summary for the command to print.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import django
import numpy as np
import scipy

from analytic.ber import analytic_ber, snr_at_ber
from analytic.throughput import sinr_report, throughput
from channel.lambertian import concentrator_gain, varpi
from channel.matrix import build_channel_matrix, gain_map
from core.exceptions import DomainError, SimulationError
from csi.estimates import PerturbationModel
from csi.mobility import MobilityEvent, error_bound, error_bound_full_geometry
from montecarlo.engine import (
    CsiSettings,
    CsiState,
    ThresholdMode,
    channel_estimate,
    exhaustive_errors,
    simulate,
    sweep,
)
from precoding.precoders import PrecoderKind, channel_condition_number, ci_precoder

from .writers import write_csv, write_metadata

logger = logging.getLogger(__name__)


@dataclass
class RunOutput:
    paths: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def metadata(config, kind, **extra):
    return {
        'kind': kind,
        'preset': config.preset,
        'source': config.source,
        'config_sha256': config.config_hash,
        'seed': config.seed,
        'config': config.as_dict(),
        'versions': {'django': django.get_version(), 'numpy': np.__version__, 'scipy': scipy.__version__},
        **extra,
    }


def _write(config, kind, header, rows, **extra):
    csv_path = write_csv(config.output_path(f'{kind}.csv'), header, rows, config.config_hash, config.seed)
    json_path = write_metadata(config.output_path(f'{kind}.json'), metadata(config, kind, **extra))
    return [csv_path, json_path]


def physical_snr_db(layout, noise):
    """Transmit SNR 20 log10(gamma P / sigma) against the dark-current noise floor"""
    sigma = float(np.mean(noise.sigma(np.zeros(len(layout.detectors)))))
    return 20.0 * math.log10(layout.responsivity * layout.transmit_power / sigma)


def ber_points(config, h, layout, cfg, estimate=None):
    """(snr_db, analytic BerResult, BerEstimate or None) for one scheme"""
    if cfg.csi.is_outdated and estimate is None:
        estimate = channel_estimate(h, cfg)
    if not config.is_physical:
        curve = sweep(h, config.snr_points(), cfg, monte_carlo=config.monte_carlo, estimate=estimate)
        return [(p.snr_db, p.analytic, p.estimate) for p in curve.points]

    noise = config.noise_model(layout)
    h_hat = estimate.h_hat if estimate is not None else None
    result = analytic_ber(cfg.scheme, h, noise, cfg.responsivity, cfg.power, h_hat=h_hat,
                          renormalize=cfg.renormalize_oap, tolerance=cfg.tolerance)
    simulated = simulate(h, replace(cfg, noise=noise), estimate) if config.monte_carlo else None
    return [(physical_snr_db(layout, noise), result, simulated)]


def _mc_columns(estimate):
    if estimate is None:
        return [None, None, None]
    return [estimate.average, estimate.average_halfwidth_95, estimate.symbols_run]


def _crossing(config, h, layout, cfg, estimate):
    if config.is_physical:
        return None
    sweep_cfg = config['sweep']
    h_hat = estimate.h_hat if estimate is not None else None

    def ber_at(snr_db):
        noise = config.noise_model(layout, snr_db)
        return analytic_ber(cfg.scheme, h, noise, cfg.responsivity, cfg.power, h_hat=h_hat,
                            renormalize=cfg.renormalize_oap, tolerance=cfg.tolerance).average

    try:
        return snr_at_ber(ber_at, sweep_cfg['target_ber'], sweep_cfg['snr_start'], sweep_cfg['snr_stop'])
    except DomainError:
        return None


def _sinr_block(config, h, layout):
    if config.is_physical:
        noise = config.noise_model(layout)
        sigma = noise.sigma(np.zeros(h.n_r))
        return [{'snr_db': physical_snr_db(layout, noise), 'sinr': list(sinr_report(h, layout.responsivity,
                                                                                    layout.transmit_power, sigma))}]
    block = []
    for snr_db in config.snr_points():
        sigma = config.noise_model(layout, snr_db).sigma_swept
        block.append({'snr_db': snr_db, 'sinr': list(sinr_report(h, layout.responsivity, layout.transmit_power,
                                                                 sigma))})
    return block


def run_channel_map(config):
    layout = config.layout()
    resolution = config['sweep']['grid_resolution']
    gains = gain_map(layout, resolution)
    rows = [(float(x), float(y), float(gains.values[iy, ix]))
            for iy, y in enumerate(gains.ys) for ix, x in enumerate(gains.xs)]
    x, y, peak = gains.peak()
    paths = _write(
        config, 'channel_map', ['x', 'y', 'gain'], rows,
        layout=layout.label,
        luminaires=[list(led.position) for led in layout.luminaires],
        grid_shape=list(gains.shape),
        peak={'x': x, 'y': y, 'gain': peak},
    )
    logger.info('channel map of %s: %dx%d cells, peak %.4g at (%.3f, %.3f)', layout.label, *gains.shape, peak, x, y)
    return RunOutput(paths=paths, summary={'layout': layout.label, 'peak_gain': peak})


def _dump_precoders(config, family, value, h, tolerance):
    precoder = ci_precoder(h, tolerance)
    suffix = '' if family is None else f'_{family}_{value:g}'
    header = [f'pd{j}' for j in range(precoder.n_r)]
    return write_csv(config.output_path(f'precoder{suffix}.csv'), header, precoder.w.tolist(),
                     config.config_hash, config.seed)


def run_ber_sweep(config):
    layouts = config.layouts()
    width = max(len(layout.detectors) for _, _, layout in layouts)
    header = ['family', 'family_value', 'snr_db', 'scheme', 'csi_mode',
              *[f'ber_pd{i}' for i in range(width)], 'ber_avg', 'mc_ber', 'mc_halfwidth', 'symbols']
    rows, crossings, sinr, conditions, paths = [], [], [], [], []

    for family, value, layout in layouts:
        h = build_channel_matrix(layout)
        conditions.append({'family_value': value, 'layout': layout.label,
                           'condition_number': channel_condition_number(h.gains)})
        sinr.append({'family_value': value, 'points': _sinr_block(config, h, layout)})
        for scheme in config.schemes:
            cfg = config.sim_config(scheme, layout)
            estimate = channel_estimate(h, cfg)
            for snr_db, result, simulated in ber_points(config, h, layout, cfg, estimate):
                per_pd = list(result.per_pd) + [None] * (width - len(result.per_pd))
                rows.append([family, value, snr_db, scheme, result.csi, *per_pd, result.average,
                             *_mc_columns(simulated)])
            crossings.append({'family_value': value, 'scheme': scheme.value,
                              'snr_db': _crossing(config, h, layout, cfg, estimate)})
        if config['simulation']['dump_precoders']:
            paths.append(_dump_precoders(config, family, value, h, config['simulation']['tolerance']))

    target = f"snr_at_ber_{config['sweep']['target_ber']:g}"
    paths = _write(config, 'ber_sweep', header, rows, **{target: crossings}, sinr=sinr,
                   channels=conditions) + paths
    return RunOutput(paths=paths, summary={'rows': len(rows), target: crossings})


def run_throughput_sweep(config):
    header = ['family', 'family_value', 'snr_db', 'scheme', 'throughput']
    rows = []
    renormalize = config['sweep']['renormalize_oap']
    tolerance = config['simulation']['tolerance']
    for family, value, layout in config.layouts():
        h = build_channel_matrix(layout)
        power = layout.transmit_power
        if config.is_physical:
            noise = config.noise_model(layout)
            points = [(physical_snr_db(layout, noise), noise)]
        else:
            points = [(snr_db, config.noise_model(layout, snr_db)) for snr_db in config.snr_points()]
        for scheme in config.schemes:
            for snr_db, noise in points:
                value_bits = throughput(scheme, h, noise, layout.responsivity, power, renormalize, tolerance)
                rows.append([family, value, snr_db, scheme, value_bits])
            logger.info('%s throughput for %s: %d points', scheme.value, layout.label, len(points))
    paths = _write(config, 'throughput_sweep', header, rows, unit='bit/s/Hz')
    return RunOutput(paths=paths, summary={'rows': len(rows)})


def mobility_bounds(layout, user, velocity, heading, elapsed_time):
    """
    Worst error over the mobile user's row: the distance-only bound and the
    full-geometry cross-check, each maximised over the luminaires.
    """
    detector = layout.detectors[user]
    start = detector.position[:2]
    z = layout.plane_separation
    closed_form, full = 0.0, 0.0
    for led in layout.luminaires:
        event = MobilityEvent.from_velocity(start, heading, velocity, elapsed_time, z, anchor_xy=led.position[:2])
        m = led.lambertian_order
        w = varpi(m, detector.area, detector.filter_gain,
                  concentrator_gain(0.0, detector.fov, detector.refractive_index), z)
        closed_form = max(closed_form, error_bound(event, w, m))
        full = max(full, error_bound_full_geometry(event, led, detector))
    if not event.within(layout.room_x, layout.room_y):
        logger.warning('user %d leaves the room after %.3g s at %.3g m/s', user, elapsed_time, velocity)
    return closed_form, full


def run_mobility(config):
    header = ['elapsed_time', 'velocity', 'error_bound', 'error_bound_full', 'csi_mode', 'csi_model',
              'snr_db', 'scheme', 'ber_avg', 'mc_ber', 'mc_halfwidth', 'symbols']
    mobility = config['mobility']
    layout = config.layout()
    h = build_channel_matrix(layout)
    user, velocity = mobility['user'], mobility['velocity']

    cases = [(0.0, 0.0, 0.0, config.csi_settings(bound=0.0, mode=CsiState.PERFECT.value))]
    for t in mobility['elapsed_times']:
        bound, full = mobility_bounds(layout, user, velocity, mobility['heading'], t)
        csi = CsiSettings(mode=CsiState.OUTDATED, model=PerturbationModel(mobility['model']), bound=bound,
                          mobile_users=(user,), sign=config.csi_settings().sign)
        cases.append((t, bound, full, csi))

    rows, bounds = [], []
    for t, bound, full, csi in cases:
        bounds.append({'elapsed_time': t, 'error_bound': bound, 'error_bound_full': full})
        for scheme in config.schemes:
            cfg = config.sim_config(scheme, layout, csi=csi)
            for snr_db, result, simulated in ber_points(config, h, layout, cfg):
                model = csi.model if csi.is_outdated else None
                rows.append([t, velocity, bound, full, csi.mode, model, snr_db, scheme, result.average,
                             *_mc_columns(simulated)])
    paths = _write(config, 'mobility', header, rows, layout=layout.label, bounds=bounds)
    return RunOutput(paths=paths, summary={'rows': len(rows), 'bounds': bounds})


def run_validate(config):
    """Condition numbers and the noiseless exhaustive self-check, no files"""
    channels = []
    for family, value, layout in config.layouts():
        h = build_channel_matrix(layout)
        report = {
            'family': family,
            'family_value': value,
            'layout': layout.label,
            'condition_number': channel_condition_number(h.gains),
            'gain_range': [float(h.gains.min()), float(h.gains.max())],
        }
        for scheme in PrecoderKind:
            cfg = config.sim_config(scheme, layout, csi=config.csi_settings(mode=CsiState.PERFECT.value))
            cfg = replace(cfg, threshold=ThresholdMode.GENIE)
            errors = exhaustive_errors(h, cfg)
            if any(errors):
                raise SimulationError(f'noiseless self-check failed for {scheme.value} on {layout.label}: {errors}')
            report[f'{scheme.value}_noiseless_errors'] = sum(errors)
        channels.append(report)
    return RunOutput(summary={'config_sha256': config.config_hash, 'config': config.as_dict(), 'channels': channels})
