import math

import numpy as np
import pytest

from analytic.ber import analytic_ber, q_function
from analytic.links import LinkTable
from channel.factories import GridLayoutFactory
from channel.matrix import ChannelMatrix, build_channel_matrix
from core.exceptions import DomainError
from csi.estimates import PerturbationModel
from noise.variances import NoiseModel, NoiseParams
from precoding.precoders import PrecoderKind

from .engine import (
    BerEstimate,
    CsiState,
    SimConfig,
    ThresholdMode,
    channel_estimate,
    detect,
    exhaustive_errors,
    simulate,
    sweep,
    word_thresholds,
)
from .factories import CsiSettingsFactory, SimConfigFactory

POWER = 36.0


def grid(count=4, spacing=1.0):
    return build_channel_matrix(GridLayoutFactory(count=count, spacing=spacing))


def within(estimate, expected, sigmas=3.0):
    """Per-PD agreement in binomial standard errors of the expected value"""
    n = estimate.symbols_run
    for got, p in zip(estimate.per_pd_ber, expected):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(got - p) <= sigmas * se, (got, p, se)


class TestDetect:
    def test_tie_is_zero(self):
        assert detect(0.5, 0.5) == 0

    def test_double_threshold_is_one(self):
        assert detect(1.0, 0.5) == 1

    def test_vector(self):
        np.testing.assert_array_equal(detect([0.1, 0.6, 0.5], [0.5, 0.5, 0.5]), [0, 1, 0])

    @pytest.mark.parametrize('scheme', list(PrecoderKind))
    def test_genie_threshold_is_half_beta(self, scheme):
        table = LinkTable.build(grid(4, 0.5), scheme, 1.0, POWER)
        np.testing.assert_allclose(
            word_thresholds(table, ThresholdMode.GENIE),
            np.repeat(0.5 * POWER * table.codebook.betas[:, None], 4, axis=1),
            rtol=1e-9,
        )

    def test_fixed_threshold_uses_mean_beta(self):
        table = LinkTable.build(grid(), PrecoderKind.CI, 1.0, POWER)
        tau = word_thresholds(table, ThresholdMode.FIXED)
        assert (tau == tau[0, 0]).all()
        assert tau[0, 0] == pytest.approx(0.5 * POWER * table.codebook.mean_beta())


class TestConfig:
    def test_needs_symbols(self):
        with pytest.raises(DomainError):
            SimConfig(n_symbols=0)

    def test_early_stop_minimum(self):
        with pytest.raises(DomainError):
            SimConfig(n_symbols=10, early_stop_errors=50)
        assert SimConfig(n_symbols=10, early_stop_errors=100).early_stop_errors == 100

    def test_blocks(self):
        cfg = SimConfig(n_symbols=10_000, block_size=4096)
        assert cfg.n_blocks == 3
        assert [cfg.block_length(b) for b in range(3)] == [4096, 4096, 1808]

    def test_swept_noise_rejects_infinite_snr(self):
        with pytest.raises(DomainError):
            NoiseModel.swept(-math.inf, 1.0, POWER)


class TestNoiseless:
    @pytest.mark.parametrize('scheme', list(PrecoderKind))
    @pytest.mark.parametrize('count', [2, 4, 8])
    def test_every_word_detected(self, scheme, count):
        cfg = SimConfigFactory(scheme=scheme)
        assert exhaustive_errors(grid(count, 0.5), cfg) == (0,) * count

    @pytest.mark.parametrize('scheme', list(PrecoderKind))
    def test_simulated_symbols_error_free(self, scheme):
        result = simulate(grid(4, 0.5), SimConfigFactory(scheme=scheme))
        assert result.per_pd_errors == (0, 0, 0, 0)
        assert result.symbols_run == 20_000

    def test_fixed_threshold_error_free(self):
        cfg = SimConfigFactory(threshold=ThresholdMode.FIXED)
        assert exhaustive_errors(grid(), cfg) == (0, 0, 0, 0)


def agreement_points(low=50, high=78, step=2, floor=1e-4):
    """Sweep points on the 1 m grid whose closed-form BER is large enough to estimate"""
    h = grid()
    for scheme in PrecoderKind:
        for snr_db in range(low, high + 1, step):
            noise = NoiseModel.swept(float(snr_db), 1.0, POWER)
            if analytic_ber(scheme, h, noise, 1.0, POWER).average >= floor:
                yield pytest.param(scheme, float(snr_db), id=f'{scheme.value}-{snr_db}dB')


class TestAgreement:
    @pytest.mark.parametrize('scheme, snr_db', list(agreement_points()))
    def test_matches_closed_form(self, scheme, snr_db):
        h = grid()
        noise = NoiseModel.swept(snr_db, 1.0, POWER)
        cfg = SimConfigFactory(scheme=scheme, noise=noise, n_symbols=2_000_000, block_size=65536, threads=0,
                               energy_checks=False)
        expected = analytic_ber(scheme, h, noise, 1.0, POWER)
        within(simulate(h, cfg), expected.per_pd)

    def test_scalar_channel(self):
        g = 2.2e-3
        noise = NoiseModel.swept(70.0, 1.0, POWER)
        sigma = noise.sigma_swept
        expected = (q_function(POWER / (2 * sigma)) + q_function(POWER * g / (2 * sigma))) / 2
        cfg = SimConfigFactory(noise=noise, n_symbols=1_000_000, block_size=65536, energy_checks=False)
        within(simulate(ChannelMatrix(gains=[[g]]), cfg), (expected,))

    def test_physical_noise(self):
        h = grid()
        noise = NoiseModel.physical(NoiseParams(), 1.0, [1e-4] * 4)
        cfg = SimConfigFactory(noise=noise, power=1e-6)
        expected = analytic_ber(PrecoderKind.CI, h, noise, 1.0, 1e-6)
        within(simulate(h, cfg), expected.per_pd)


class TestDeterminism:
    def test_same_seed_same_counts(self):
        cfg = SimConfigFactory(noise=NoiseModel.swept(66.0, 1.0, POWER), block_size=1000)
        assert simulate(grid(), cfg) == simulate(grid(), cfg)

    def test_thread_count_does_not_matter(self):
        h = grid(4, 0.5)
        noise = NoiseModel.swept(66.0, 1.0, POWER)
        counts = {
            threads: simulate(h, SimConfigFactory(scheme=PrecoderKind.OAP, noise=noise, block_size=1000,
                                                  threads=threads))
            for threads in (1, 3, 8)
        }
        assert counts[1] == counts[3] == counts[8]
        assert counts[1].errors > 0

    def test_early_stop_is_thread_independent(self):
        noise = NoiseModel.swept(60.0, 1.0, POWER)
        results = [
            simulate(grid(), SimConfigFactory(noise=noise, n_symbols=200_000, block_size=1000,
                                              early_stop_errors=500, threads=threads))
            for threads in (1, 4)
        ]
        assert results[0] == results[1]
        assert results[0].errors >= 500
        assert results[0].symbols_run < 200_000
        assert results[0].symbols_run % 1000 == 0

    def test_seed_changes_counts(self):
        noise = NoiseModel.swept(60.0, 1.0, POWER)
        a = simulate(grid(), SimConfigFactory(noise=noise, seed=1))
        b = simulate(grid(), SimConfigFactory(noise=noise, seed=2))
        assert a.per_pd_errors != b.per_pd_errors


class TestOutdated:
    h = grid(4, 0.5)

    def outdated(self, **kwargs):
        csi = CsiSettingsFactory(mode=CsiState.OUTDATED, model=PerturbationModel.UNIFORM, bound=5e-5,
                                 mobile_users=(0, 3))
        return SimConfigFactory(csi=csi, **kwargs)

    def test_estimate_follows_seed(self):
        assert channel_estimate(self.h, SimConfigFactory()) is None
        a = channel_estimate(self.h, self.outdated(seed=5))
        b = channel_estimate(self.h, self.outdated(seed=5))
        np.testing.assert_array_equal(a.h_hat.gains, b.h_hat.gains)
        assert np.abs(a.error).max() <= 5e-5

    @pytest.mark.parametrize('scheme', list(PrecoderKind))
    @pytest.mark.parametrize('snr_db', [64.0, 70.0])
    def test_bound_covers_simulation(self, scheme, snr_db):
        noise = NoiseModel.swept(snr_db, 1.0, POWER)
        cfg = self.outdated(scheme=scheme, noise=noise, n_symbols=500_000, block_size=65536, threads=0)
        estimate = channel_estimate(self.h, cfg)
        bound = analytic_ber(scheme, self.h, noise, 1.0, POWER, h_hat=estimate.h_hat)
        result = simulate(self.h, cfg, estimate)
        for got, limit, se in zip(result.per_pd_ber, bound.per_pd, result.standard_error):
            assert got <= limit + 3 * se + 1e-6


class TestSweep:
    def test_sorted_points(self):
        curve = sweep(grid(), [70, 60, 65], SimConfigFactory(), monte_carlo=False)
        assert curve.snrs == (60.0, 65.0, 70.0)
        averages = curve.analytic_averages()
        assert averages[0] > averages[1] > averages[2]
        assert all(p.estimate is None for p in curve.points)

    def test_single_point_is_simulate(self):
        cfg = SimConfigFactory(scheme=PrecoderKind.OAP)
        curve = sweep(grid(), [66.0], cfg)
        direct = simulate(grid(), SimConfigFactory(scheme=PrecoderKind.OAP,
                                                   noise=NoiseModel.swept(66.0, 1.0, POWER)))
        assert curve.points[0].estimate == direct
        assert curve.scheme is PrecoderKind.OAP
        assert len(curve) == 1

    def test_needs_points(self):
        with pytest.raises(DomainError):
            sweep(grid(), [], SimConfigFactory())


class TestEstimate:
    def test_rates(self):
        estimate = BerEstimate(per_pd_errors=(10, 0), symbols_run=1000)
        assert estimate.per_pd_ber == (0.01, 0.0)
        assert estimate.average == pytest.approx(0.005)
        assert estimate.halfwidth_95[0] == pytest.approx(1.96 * math.sqrt(0.01 * 0.99 / 1000))
        assert estimate.halfwidth_95[1] == 0.0

    def test_empty_run(self):
        assert BerEstimate(per_pd_errors=(0,), symbols_run=0).per_pd_ber == (0.0,)
