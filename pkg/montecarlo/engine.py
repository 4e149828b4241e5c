"""
Symbol-level Monte Carlo BER engine.

Symbols are processed in blocks. Block b draws its words and noise from
its own generator, seeded by (seed, 1, b), so the counts do not depend on
how many worker threads share the blocks. The stale channel estimate of an
outdated-CSI run is drawn from the (seed, 0) stream.
"""
import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from analytic.ber import analytic_ber
from analytic.links import LinkTable
from core.exceptions import DomainError, SimulationError
from csi.estimates import PerturbationModel, SignPolicy, perturb_channel
from noise.variances import NoiseModel
from precoding.precoders import DEFAULT_TOLERANCE, PrecoderKind

logger = logging.getLogger(__name__)

MIN_EARLY_STOP_ERRORS = 100
Z_95 = 1.96

PERTURBATION_STREAM = 0
BLOCK_STREAM = 1


class ThresholdMode(enum.Enum):
    GENIE = 'genie'
    FIXED = 'fixed'


class CsiState(enum.Enum):
    PERFECT = 'perfect'
    OUTDATED = 'outdated'


@dataclass(frozen=True)
class CsiSettings:
    mode: CsiState = CsiState.PERFECT
    model: PerturbationModel = PerturbationModel.WORST_CASE
    bound: float = 0.0
    mobile_users: tuple = (0,)
    sign: SignPolicy = SignPolicy.PESSIMISTIC

    def __post_init__(self):
        if not self.bound >= 0:
            raise DomainError(f'CSI error bound must be non-negative, got {self.bound}')

    @property
    def is_outdated(self):
        return self.mode is CsiState.OUTDATED


@dataclass(frozen=True)
class SimConfig:
    n_symbols: int
    seed: int = 1
    scheme: PrecoderKind = PrecoderKind.CI
    csi: CsiSettings = field(default_factory=CsiSettings)
    noise: NoiseModel = field(default_factory=NoiseModel.noiseless)
    threshold: ThresholdMode = ThresholdMode.GENIE
    early_stop_errors: int = None
    block_size: int = 65536
    threads: int = 1
    renormalize_oap: bool = False
    responsivity: float = 1.0
    power: float = 36.0
    energy_checks: bool = False
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if self.n_symbols < 1:
            raise DomainError(f'n_symbols must be at least 1, got {self.n_symbols}')
        if self.early_stop_errors is not None and self.early_stop_errors < MIN_EARLY_STOP_ERRORS:
            raise DomainError(f'early stop needs at least {MIN_EARLY_STOP_ERRORS} errors, got {self.early_stop_errors}')
        if self.block_size < 1:
            raise DomainError(f'block_size must be at least 1, got {self.block_size}')
        if self.threads < 0:
            raise DomainError(f'threads must be non-negative, got {self.threads}')
        if self.seed < 0:
            raise DomainError(f'seed must be non-negative, got {self.seed}')

    @property
    def workers(self):
        return self.threads or os.cpu_count() or 1

    @property
    def n_blocks(self):
        return math.ceil(self.n_symbols / self.block_size)

    def block_length(self, block):
        return min(self.block_size, self.n_symbols - block * self.block_size)


@dataclass(frozen=True)
class BerEstimate:
    per_pd_errors: tuple
    symbols_run: int

    @property
    def errors(self):
        return sum(self.per_pd_errors)

    @property
    def per_pd_ber(self):
        if not self.symbols_run:
            return tuple(0.0 for _ in self.per_pd_errors)
        return tuple(e / self.symbols_run for e in self.per_pd_errors)

    @property
    def standard_error(self):
        n = max(self.symbols_run, 1)
        return tuple(math.sqrt(p * (1 - p) / n) for p in self.per_pd_ber)

    @property
    def halfwidth_95(self):
        return tuple(Z_95 * se for se in self.standard_error)

    @property
    def average(self):
        return self.errors / (max(self.symbols_run, 1) * len(self.per_pd_errors))

    @property
    def average_halfwidth_95(self):
        n = max(self.symbols_run, 1) * len(self.per_pd_errors)
        p = self.average
        return Z_95 * math.sqrt(p * (1 - p) / n)


def detect(y, threshold):
    """Hard OOK decision, 1 iff y is strictly above the threshold"""
    bits = np.asarray(y) > np.asarray(threshold)
    if bits.ndim == 0:
        return int(bits)
    return bits.astype(np.int8)


def channel_estimate(h, cfg):
    """The stale estimate an outdated-CSI run precodes with, or None"""
    if not cfg.csi.is_outdated:
        return None
    seed = np.random.SeedSequence(cfg.seed, spawn_key=(PERTURBATION_STREAM,))
    return perturb_channel(h, cfg.csi.bound, cfg.csi.model, seed=seed,
                           mobile_users=cfg.csi.mobile_users, sign=cfg.csi.sign)


def link_table(h, cfg, estimate=None):
    h_hat = estimate.h_hat if estimate is not None else None
    return LinkTable.build(h, cfg.scheme, cfg.responsivity, cfg.power, h_hat=h_hat,
                           renormalize=cfg.renormalize_oap, tolerance=cfg.tolerance)


def word_thresholds(table, mode):
    if mode is ThresholdMode.GENIE:
        return table.thresholds()
    tau = 0.5 * table.gamma_p * table.codebook.mean_beta()
    return np.full((table.codebook.size, table.n_users), tau)


def _expected_drive_norms(codebook):
    if codebook.kind is PrecoderKind.OAP and not codebook.renormalized:
        return codebook.ones.astype(float)
    return codebook.nonzero.astype(float)


@dataclass(frozen=True)
class _WordTables:
    """Per-word quantities a block indexes by its drawn word numbers"""
    words: np.ndarray
    amplitudes: np.ndarray
    thresholds: np.ndarray
    sigmas: np.ndarray
    drives: np.ndarray
    drive_norms: np.ndarray

    @classmethod
    def build(cls, table, cfg):
        codebook = table.codebook
        return cls(
            words=codebook.words,
            amplitudes=table.amplitudes(),
            thresholds=word_thresholds(table, cfg.threshold),
            sigmas=table.sigmas(cfg.noise),
            drives=codebook.drives,
            drive_norms=_expected_drive_norms(codebook),
        )


def _check_energy(tables, index, block):
    norms = np.linalg.norm(tables.drives[index], axis=1)
    expected = tables.drive_norms[index]
    if not np.allclose(norms, expected, rtol=1e-9, atol=1e-12):
        worst = float(np.abs(norms - expected).max())
        raise SimulationError(f'transmit energy off by {worst:.3g} in block {block}')


def _run_block(tables, cfg, block):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(BLOCK_STREAM, block)))
    length = cfg.block_length(block)
    index = rng.integers(0, tables.words.shape[0], size=length)
    if cfg.energy_checks:
        _check_energy(tables, index, block)
    noise = rng.standard_normal((length, tables.words.shape[1]))
    y = tables.amplitudes[index] + tables.sigmas[index] * noise
    bits = detect(y, tables.thresholds[index])
    errors = np.count_nonzero(bits != tables.words[index], axis=0)
    logger.debug('block %d: %d symbols, %d errors', block, length, int(errors.sum()))
    return length, errors


def simulate(h, cfg, estimate=None):
    """
    Monte Carlo BER of ``cfg.scheme`` over the true channel ``h``.

    Blocks are evaluated ``cfg.workers`` at a time and folded in block order,
    so an early stop lands on the same block for any thread count.
    """
    if cfg.csi.is_outdated and estimate is None:
        estimate = channel_estimate(h, cfg)
    tables = _WordTables.build(link_table(h, cfg, estimate), cfg)

    errors = np.zeros(tables.words.shape[1], dtype=np.int64)
    symbols = 0
    workers = cfg.workers
    stopped = False
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for start in range(0, cfg.n_blocks, workers):
            chunk = range(start, min(start + workers, cfg.n_blocks))
            for length, block_errors in executor.map(lambda b: _run_block(tables, cfg, b), chunk):
                errors += block_errors
                symbols += length
                if cfg.early_stop_errors is not None and errors.sum() >= cfg.early_stop_errors:
                    stopped = True
                    break
            if stopped:
                logger.debug('early stop after %d symbols with %d errors', symbols, int(errors.sum()))
                break
    return BerEstimate(per_pd_errors=tuple(int(e) for e in errors), symbols_run=symbols)


def exhaustive_errors(h, cfg, estimate=None, seed=None):
    """
    Detect every word once under the configured noise and count bit errors per PD.

    With the noiseless model this is the exact error-free check.
    """
    table = link_table(h, cfg, estimate)
    tables = _WordTables.build(table, cfg)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    y = tables.amplitudes + tables.sigmas * rng.standard_normal(tables.amplitudes.shape)
    bits = detect(y, tables.thresholds)
    return tuple(int(e) for e in np.count_nonzero(bits != tables.words, axis=0))


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    analytic: object
    estimate: BerEstimate = None


@dataclass(frozen=True)
class BerCurve:
    scheme: PrecoderKind
    csi: CsiState
    points: tuple

    def __len__(self):
        return len(self.points)

    @property
    def snrs(self):
        return tuple(p.snr_db for p in self.points)

    def analytic_averages(self):
        return tuple(p.analytic.average for p in self.points)


def sweep(h, snr_points, cfg, monte_carlo=True, estimate=None):
    """
    Analytic BER and, optionally, a Monte Carlo estimate at every transmit SNR.

    The noise of ``cfg`` is replaced by the swept model of each point; an
    outdated-CSI template draws one estimate shared by all points.
    """
    snr_points = sorted(float(s) for s in snr_points)
    if not snr_points:
        raise DomainError('sweep needs at least one SNR point')
    if cfg.csi.is_outdated and estimate is None:
        estimate = channel_estimate(h, cfg)
    h_hat = estimate.h_hat if estimate is not None else None

    points = []
    for snr_db in snr_points:
        noise = NoiseModel.swept(snr_db, cfg.responsivity, cfg.power)
        point_cfg = replace(cfg, noise=noise)
        analytic = analytic_ber(cfg.scheme, h, noise, cfg.responsivity, cfg.power, h_hat=h_hat,
                                renormalize=cfg.renormalize_oap, tolerance=cfg.tolerance)
        result = simulate(h, point_cfg, estimate) if monte_carlo else None
        if result is not None:
            logger.info('%s %s %.2f dB: analytic %.3e, simulated %.3e over %d symbols',
                        cfg.scheme.value, cfg.csi.mode.value, snr_db, analytic.average, result.average,
                        result.symbols_run)
        else:
            logger.info('%s %s %.2f dB: analytic %.3e', cfg.scheme.value, cfg.csi.mode.value, snr_db,
                        analytic.average)
        points.append(BerPoint(snr_db=snr_db, analytic=analytic, estimate=result))
    return BerCurve(scheme=cfg.scheme, csi=cfg.csi.mode, points=tuple(points))
