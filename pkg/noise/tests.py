import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.exceptions import DomainError

from .variances import (
    NoiseMode,
    NoiseModel,
    NoiseParams,
    shot_variance,
    sigma_from_transmit_snr,
    thermal_variance,
    total_sigma,
)

PARAMS = NoiseParams()
ROW = np.array([2.2e-3, 1.0e-4, 0.0, 0.0])

variance = st.floats(0.0, 1e6, allow_nan=False)


class TestShotNoise:
    def test_dark_term_only(self):
        assert shot_variance(ROW, np.zeros(4), 1.0, PARAMS) == pytest.approx(
            2 * PARAMS.q * PARAMS.bandwidth * PARAMS.i_bg * PARAMS.i2, rel=1e-12
        )

    def test_table_values(self):
        assert shot_variance(ROW, np.zeros(4), 1.0, PARAMS) == pytest.approx(1.80e-15, rel=1e-2)

    def test_signal_term_is_linear(self):
        dark = shot_variance(ROW, np.zeros(4), 1.0, PARAMS)
        once = shot_variance(ROW, np.full(4, 10.0), 1.0, PARAMS) - dark
        twice = shot_variance(ROW, np.full(4, 20.0), 1.0, PARAMS) - dark
        assert twice == pytest.approx(2 * once, rel=1e-9)

    def test_rejects_negative_signal(self):
        with pytest.raises(DomainError):
            shot_variance(ROW, np.array([1.0, -1.0, 0.0, 0.0]), 1.0, PARAMS)


class TestThermalNoise:
    def test_defaults_match_hand_computation(self):
        kt = 1.380649e-23 * 295.0
        first = 8 * math.pi * kt / 10.0 * 1.12e-6 * 1e-4 * 0.562 * 1e8 ** 2
        second = 16 * math.pi ** 2 * kt * 1.5 / 0.03 * 1.12e-6 ** 2 * 1e-8 * 0.0868 * 1e8 ** 3
        assert thermal_variance(1e-4, PARAMS) == pytest.approx(first + second, rel=1e-12)
        assert math.isfinite(thermal_variance(1e-4, PARAMS))

    def test_bandwidth_scaling(self):
        wide = NoiseParams(bandwidth=2e8)
        kt = PARAMS.k_boltzmann * PARAMS.temperature
        first = 8 * math.pi * kt / 10.0 * 1.12e-6 * 1e-4 * 0.562 * 1e8 ** 2
        second = thermal_variance(1e-4, PARAMS) - first
        assert thermal_variance(1e-4, wide) == pytest.approx(4 * first + 8 * second, rel=1e-9)

    def test_vanishes_with_area(self):
        assert thermal_variance(1e-12, PARAMS) < 1e-20

    def test_rejects_zero_area(self):
        with pytest.raises(DomainError):
            thermal_variance(0.0, PARAMS)


class TestSigma:
    def test_total_sigma(self):
        assert total_sigma(0.0, 0.0) == 0.0
        assert total_sigma(9.0, 16.0) == 5.0

    @given(a=variance, b=variance)
    def test_total_sigma_is_symmetric(self, a, b):
        assert total_sigma(a, b) == total_sigma(b, a)

    def test_physical_defaults_compose(self):
        shot = shot_variance(ROW, np.full(4, 36.0), 1.0, PARAMS)
        thermal = thermal_variance(1e-4, PARAMS)
        assert total_sigma(shot, thermal) == pytest.approx(math.sqrt(shot + thermal), rel=1e-15)

    def test_transmit_snr(self):
        assert sigma_from_transmit_snr(0.0, 1.0, 1.0) == 1.0
        assert sigma_from_transmit_snr(20.0, 1.0, 36.0) == pytest.approx(3.6, rel=1e-12)

    def test_transmit_snr_is_monotone(self):
        sigmas = [sigma_from_transmit_snr(snr, 1.0, 36.0) for snr in range(0, 81, 5)]
        assert all(a > b for a, b in zip(sigmas, sigmas[1:]))

    @pytest.mark.parametrize('snr', [math.inf, -math.inf, math.nan])
    def test_transmit_snr_must_be_finite(self, snr):
        with pytest.raises(DomainError):
            sigma_from_transmit_snr(snr, 1.0, 1.0)

    def test_transmit_snr_needs_power(self):
        with pytest.raises(DomainError):
            sigma_from_transmit_snr(10.0, 1.0, 0.0)

    def test_params_must_be_positive(self):
        with pytest.raises(DomainError):
            NoiseParams(temperature=0.0)


class TestNoiseModel:
    def test_swept_is_shared(self):
        model = NoiseModel.swept(40.0, 1.0, 36.0)
        sigma = model.sigma(np.array([0.0, 1.0, 5.0]))
        np.testing.assert_allclose(sigma, 0.36, rtol=1e-12)
        assert not model.is_signal_dependent

    def test_noiseless(self):
        assert np.all(NoiseModel.noiseless().sigma(np.ones(3)) == 0.0)

    def test_physical_follows_received_power(self):
        model = NoiseModel.physical(PARAMS, 1.0, [1e-4, 1e-4])
        assert model.mode is NoiseMode.PHYSICAL
        dark, lit = model.sigma(np.array([0.0, 0.08]))
        assert lit > dark
        assert dark == pytest.approx(total_sigma(shot_variance([0.0], [0.0], 1.0, PARAMS),
                                                 thermal_variance(1e-4, PARAMS)))

    def test_physical_clamps_negative_power(self):
        model = NoiseModel.physical(PARAMS, 1.0, [1e-4])
        assert model.sigma(np.array([-1.0])) == pytest.approx(model.sigma(np.array([0.0])))
