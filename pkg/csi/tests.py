import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channel.factories import GridLayoutFactory, LuminaireFactory, PhotoDetectorFactory
from channel.lambertian import channel_gain, concentrator_gain, lambertian_order, varpi
from channel.matrix import ChannelMatrix, build_channel_matrix
from core.exceptions import DomainError
from precoding.precoders import adaptive_mask, ci_precoder, scaling_beta

from .estimates import ChannelEstimate, PerturbationModel, SignPolicy, perturb_channel, residual_matrix
from .mobility import MobilityEvent, error_bound, error_bound_full_geometry

Z = 2.25
M = lambertian_order(15.0)
VARPI = varpi(M, 1e-4, 1.0, concentrator_gain(0.0, 15.0, 1.5), Z)


def event(start, end, t=0.1):
    return MobilityEvent(start_xy=start, end_xy=end, plane_separation=Z, elapsed_time=t)


class TestErrorBound:
    def test_no_displacement(self):
        assert error_bound(event((0.2, 0.1), (0.2, 0.1)), VARPI, M) == 0.0

    def test_tangential_move(self):
        r = 0.3
        e = event((r, 0.0), (r * math.cos(1.0), r * math.sin(1.0)))
        assert error_bound(e, VARPI, M) == pytest.approx(0.0, abs=1e-15)

    def test_grows_with_radial_displacement(self):
        bounds = [error_bound(event((0.0, 0.0), (step, 0.0)), VARPI, M) for step in (0.05, 0.1, 0.2, 0.4)]
        assert bounds[0] > 0
        assert all(a < b for a, b in zip(bounds, bounds[1:]))

    @given(
        x1=st.floats(-1, 1), y1=st.floats(-1, 1), x2=st.floats(-1, 1), y2=st.floats(-1, 1),
        angle=st.floats(0, 2 * math.pi),
    )
    def test_rotation_invariant(self, x1, y1, x2, y2, angle):
        c, s = math.cos(angle), math.sin(angle)
        rotated = event((c * x1 - s * y1, s * x1 + c * y1), (c * x2 - s * y2, s * x2 + c * y2))
        assert error_bound(rotated, VARPI, M) == pytest.approx(
            error_bound(event((x1, y1), (x2, y2)), VARPI, M), rel=1e-9, abs=1e-15
        )

    def test_velocity(self):
        e = MobilityEvent.from_velocity((1.5, 1.5), (1, 0), 2.0, 0.25, Z, anchor_xy=(1.5, 1.5))
        assert e.end_xy == pytest.approx((2.0, 1.5))
        assert e.max_velocity == pytest.approx(2.0)
        assert e.start_distance == pytest.approx(Z)

    def test_full_geometry_agrees_inside_fov(self):
        led = LuminaireFactory(position=(2.0, 2.0, 3.0))
        pd = PhotoDetectorFactory()
        e = MobilityEvent(start_xy=(2.0, 2.0), end_xy=(2.3, 2.0), plane_separation=Z, elapsed_time=1.0,
                          anchor_xy=(2.0, 2.0))
        assert error_bound_full_geometry(e, led, pd) == pytest.approx(error_bound(e, VARPI, M), rel=1e-9)

    def test_full_geometry_sees_fov_cutoff(self):
        led = LuminaireFactory(position=(2.0, 2.0, 3.0))
        pd = PhotoDetectorFactory()
        e = MobilityEvent(start_xy=(2.0, 2.0), end_xy=(3.0, 2.0), plane_separation=Z, elapsed_time=1.0,
                          anchor_xy=(2.0, 2.0))
        assert error_bound_full_geometry(e, led, pd) == pytest.approx(channel_gain(led, pd))

    @pytest.mark.parametrize('t', [0.0, -1.0])
    def test_elapsed_time_must_be_positive(self, t):
        with pytest.raises(DomainError):
            event((0, 0), (1, 0), t=t)


class TestPerturbation:
    h = build_channel_matrix(GridLayoutFactory(count=4, spacing=0.5))

    def test_zero_bound_is_exact(self):
        for model in PerturbationModel:
            estimate = perturb_channel(self.h, 0.0, model, seed=3)
            np.testing.assert_array_equal(estimate.h_hat.gains, self.h.gains)

    def test_uniform_stays_in_bound(self):
        bound = 1e-4
        worst = 0.0
        for seed in range(200):
            estimate = perturb_channel(self.h, bound, PerturbationModel.UNIFORM, seed=seed, mobile_users=(0, 2))
            worst = max(worst, np.abs(estimate.error).max())
            np.testing.assert_array_equal(estimate.error[[1, 3]], 0.0)
        assert worst <= bound

    def test_uniform_is_seeded(self):
        a = perturb_channel(self.h, 1e-4, PerturbationModel.UNIFORM, seed=11)
        b = perturb_channel(self.h, 1e-4, PerturbationModel.UNIFORM, seed=11)
        np.testing.assert_array_equal(a.h_hat.gains, b.h_hat.gains)

    def test_pessimistic_signs(self):
        bound = 1e-4
        estimate = perturb_channel(self.h, bound, mobile_users=(1,))
        np.testing.assert_allclose(estimate.error[1], [bound, -bound, bound, bound])
        assert not estimate.error[[0, 2, 3]].any()

    def test_fixed_signs(self):
        up = perturb_channel(self.h, 1e-5, sign=SignPolicy.PLUS)
        np.testing.assert_allclose(up.error[0], 1e-5)
        down = perturb_channel(self.h, 1e-5, sign=SignPolicy.MINUS)
        np.testing.assert_allclose(down.error[0, :3], -1e-5)
        # h_03 is already zero and cannot go lower
        assert down.error[0, 3] == 0.0

    @settings(deadline=None)
    @given(bound=st.floats(0.0, 1e-2), seed=st.integers(0, 2 ** 32 - 1))
    def test_gains_never_negative(self, bound, seed):
        for model in PerturbationModel:
            estimate = perturb_channel(self.h, bound, model, seed=seed, mobile_users=(0, 1, 2, 3))
            assert (estimate.h_hat.gains >= 0).all()
            assert np.abs(estimate.error).max() <= bound + 1e-15

    def test_estimate_rejects_excess_error(self):
        h = ChannelMatrix(gains=np.eye(2))
        with pytest.raises(DomainError):
            ChannelEstimate(h_hat=h.with_gains(np.eye(2) * 2), true_h=h, error_bound=0.5)

    def test_rejects_negative_bound(self):
        with pytest.raises(DomainError):
            perturb_channel(self.h, -1.0)


class TestResidual:
    h = build_channel_matrix(GridLayoutFactory(count=4, spacing=0.5))
    diagonal = build_channel_matrix(GridLayoutFactory(count=4, spacing=1.0))

    def test_fresh_csi_ci(self):
        w = ci_precoder(self.h)
        beta = scaling_beta(w, [1, 0, 1, 1])
        np.testing.assert_allclose(residual_matrix(self.h, w, beta), beta * np.eye(4), atol=1e-9 * beta)

    def test_fresh_csi_oap(self):
        w = ci_precoder(self.h)
        x = [1, 0, 1, 1]
        beta = scaling_beta(w, x)
        mask = adaptive_mask(x)
        np.testing.assert_allclose(residual_matrix(self.h, w, beta, mask), beta * mask.t, atol=1e-9 * beta)

    def test_diagonal_shift_moves_residual(self):
        bound = 1e-4
        estimate = perturb_channel(self.diagonal, bound, mobile_users=(0,))
        w_hat = ci_precoder(estimate.h_hat)
        upsilon = residual_matrix(self.diagonal, w_hat, 1.0)
        # true H = H_hat - error, and H_hat W_hat = I
        np.testing.assert_allclose(upsilon, np.eye(4) - estimate.error @ w_hat.w, atol=1e-9)
        h00 = self.diagonal.gains[0, 0]
        assert upsilon[0, 0] == pytest.approx(1 + bound / (h00 - bound), rel=1e-9)
        np.testing.assert_allclose(upsilon[1:], np.eye(4)[1:], atol=1e-12)

    def test_crosstalk_grows_with_bound(self):
        sizes = []
        for bound in (1e-5, 1e-4, 3e-4):
            estimate = perturb_channel(self.diagonal, bound)
            upsilon = residual_matrix(self.diagonal, ci_precoder(estimate.h_hat), 1.0)
            sizes.append(np.abs(upsilon - np.diag(np.diag(upsilon))).max())
        assert sizes[0] > 0
        assert sizes[0] < sizes[1] < sizes[2]
