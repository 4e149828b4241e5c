import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import DomainError

from .factories import GridLayoutFactory, LuminaireFactory, PhotoDetectorFactory, RoomLayoutFactory
from .lambertian import (
    channel_gain,
    concentrator_gain,
    lambertian_order,
    radiant_intensity,
    simplified_gain,
    varpi,
)
from .layout import grid_layout, grid_shape
from .matrix import ChannelMatrix, build_channel_matrix, gain_map

SEPARATION = 2.25


class TestLambertian:
    def test_order_at_sixty_degrees_is_exactly_one(self):
        assert lambertian_order(60.0) == 1.0

    def test_order_at_forty_five_degrees(self):
        assert lambertian_order(45.0) == pytest.approx(2.0, rel=1e-12)

    def test_order_at_fifteen_degrees(self):
        expected = -math.log(2.0) / math.log(math.cos(math.radians(15.0)))
        assert lambertian_order(15.0) == pytest.approx(expected, rel=1e-12)
        assert lambertian_order(15.0) == pytest.approx(20.0, rel=1e-2)

    @pytest.mark.parametrize('angle', [0.0, 90.0, -5.0, 120.0])
    def test_order_rejects_out_of_range(self, angle):
        with pytest.raises(DomainError):
            lambertian_order(angle)

    def test_concentrator_inside_fov(self):
        expected = 2.25 / math.sin(math.radians(15.0)) ** 2
        assert concentrator_gain(0.0, 15.0, 1.5) == pytest.approx(expected, rel=1e-12)
        assert concentrator_gain(0.0, 15.0, 1.5) == pytest.approx(33.59, rel=1e-3)

    def test_concentrator_outside_fov(self):
        assert concentrator_gain(20.0, 15.0, 1.5) == 0.0

    def test_concentrator_hemispherical(self):
        assert concentrator_gain(0.0, 90.0, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_concentrator_rejects_low_index(self):
        with pytest.raises(DomainError):
            concentrator_gain(0.0, 15.0, 0.9)

    def test_radiant_intensity(self):
        assert radiant_intensity(0.0, 1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)
        assert radiant_intensity(90.0, 1.0) == 0.0
        assert radiant_intensity(30.0, 20.0) == pytest.approx(21.0 / (2 * math.pi) * 0.75 ** 10, rel=1e-12)

    def test_aligned_pair(self):
        led = LuminaireFactory()
        pd = PhotoDetectorFactory()
        m = lambertian_order(15.0)
        g = concentrator_gain(0.0, 15.0, 1.5)
        expected = 1e-4 * (m + 1) * g / (2 * math.pi * SEPARATION ** 2)
        assert channel_gain(led, pd) == pytest.approx(expected, rel=1e-12)
        assert channel_gain(led, pd) == pytest.approx(2.22e-3, rel=1e-2)

    def test_incidence_beyond_fov_is_zero(self):
        offset = SEPARATION * math.tan(math.radians(16.0))
        pd = PhotoDetectorFactory(position=(2.0 + offset, 2.0, 0.75))
        assert channel_gain(LuminaireFactory(), pd) == 0.0

    def test_coincident_positions(self):
        with pytest.raises(DomainError):
            channel_gain(LuminaireFactory(position=(1, 1, 1)), PhotoDetectorFactory(position=(1, 1, 1)))

    def test_detector_facing_away_sees_nothing(self):
        pd = PhotoDetectorFactory(orientation=(0, 0, -1))
        assert channel_gain(LuminaireFactory(), pd) == 0.0

    def test_simplified_gain_unit_distance(self):
        assert simplified_gain(1.0, 0.37, 5.0) == pytest.approx(0.37, rel=1e-15)

    def test_simplified_gain_doubling_distance(self):
        assert simplified_gain(2.0, 1.0, 1.0) == pytest.approx(simplified_gain(1.0, 1.0, 1.0) / 16)

    def test_simplified_gain_rejects_nonpositive_distance(self):
        with pytest.raises(DomainError):
            simplified_gain(0.0, 1.0, 1.0)

    @pytest.mark.parametrize('dx, dy', [(0.0, 0.0), (0.3, 0.0), (0.2, -0.35)])
    def test_simplified_gain_matches_full_model(self, dx, dy):
        led = LuminaireFactory()
        pd = PhotoDetectorFactory(position=(2.0 + dx, 2.0 + dy, 0.75))
        m = led.lambertian_order
        w = varpi(m, pd.area, pd.filter_gain, concentrator_gain(0.0, pd.fov, pd.refractive_index), SEPARATION)
        d = math.sqrt(dx ** 2 + dy ** 2 + SEPARATION ** 2)
        assert simplified_gain(d, w, m) == pytest.approx(channel_gain(led, pd), rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(
        led_x=st.floats(0.0, 4.0),
        led_y=st.floats(0.0, 4.0),
        led_z=st.floats(1.0, 3.0),
        pd_x=st.floats(0.0, 4.0),
        pd_y=st.floats(0.0, 4.0),
        pd_z=st.floats(0.0, 0.9),
        semi_angle=st.floats(1.0, 89.0),
        fov=st.floats(1.0, 90.0),
    )
    def test_gain_is_nonnegative_and_finite(self, led_x, led_y, led_z, pd_x, pd_y, pd_z, semi_angle, fov):
        led = LuminaireFactory(position=(led_x, led_y, led_z), semi_angle_half_power=semi_angle)
        pd = PhotoDetectorFactory(position=(pd_x, pd_y, pd_z), fov=fov)
        h = channel_gain(led, pd)
        assert math.isfinite(h)
        assert h >= 0.0

    @given(near=st.floats(0.5, 2.0), extra=st.floats(0.01, 1.0))
    def test_gain_decreases_along_boresight(self, near, extra):
        led = LuminaireFactory(position=(2.0, 2.0, 3.0))
        close = PhotoDetectorFactory(position=(2.0, 2.0, 3.0 - near))
        far = PhotoDetectorFactory(position=(2.0, 2.0, 3.0 - near - extra))
        assert channel_gain(led, far) < channel_gain(led, close)

    @given(offset=st.floats(0.0, 2.0), fov=st.floats(5.0, 60.0))
    def test_gain_is_zero_outside_fov(self, offset, fov):
        led = LuminaireFactory()
        pd = PhotoDetectorFactory(position=(2.0 - offset, 2.0, 0.75), fov=fov)
        incidence = math.degrees(math.atan2(offset, SEPARATION))
        if incidence > fov + 1e-9:
            assert channel_gain(led, pd) == 0.0
        elif incidence < fov - 1e-9:
            assert channel_gain(led, pd) > 0.0


class TestLayout:
    @pytest.mark.parametrize('count, shape', [(1, (1, 1)), (2, (1, 2)), (4, (2, 2)), (8, (2, 4)), (9, (3, 3))])
    def test_grid_shape(self, count, shape):
        assert grid_shape(count) == shape

    def test_grid_is_centered(self):
        layout = grid_layout(4, 1.0)
        xs = sorted({led.position[0] for led in layout.luminaires})
        ys = sorted({led.position[1] for led in layout.luminaires})
        assert xs == [1.5, 2.5]
        assert ys == [1.5, 2.5]
        assert layout.plane_separation == pytest.approx(SEPARATION)
        for led, pd in zip(layout.luminaires, layout.detectors):
            assert led.position[:2] == pd.position[:2]

    def test_luminaire_power(self):
        assert LuminaireFactory().power == pytest.approx(36.0)

    def test_luminaire_outside_room(self):
        with pytest.raises(DomainError):
            RoomLayoutFactory(luminaires=[LuminaireFactory(position=(5.0, 2.0, 3.0))])

    def test_luminaire_below_receiver_plane(self):
        with pytest.raises(DomainError):
            RoomLayoutFactory(luminaires=[LuminaireFactory(position=(2.0, 2.0, 0.5))])

    def test_grid_too_wide_for_room(self):
        with pytest.raises(DomainError):
            grid_layout(4, 5.0)

    @pytest.mark.parametrize('field, value', [
        ('semi_angle_half_power', 90.0),
        ('power_per_led', 0.0),
        ('leds_per_luminaire', 0),
    ])
    def test_invalid_luminaire(self, field, value):
        with pytest.raises(DomainError):
            LuminaireFactory(**{field: value})

    @pytest.mark.parametrize('field, value', [
        ('area', 0.0),
        ('fov', 91.0),
        ('responsivity', -1.0),
        ('refractive_index', 0.5),
        ('filter_gain', 1.5),
    ])
    def test_invalid_detector(self, field, value):
        with pytest.raises(DomainError):
            PhotoDetectorFactory(**{field: value})


class TestChannelMatrix:
    def test_one_metre_grid_is_diagonal(self):
        h = build_channel_matrix(GridLayoutFactory(count=4, spacing=1.0))
        assert h.n_r == h.n_t == 4
        off = h.gains - np.diag(np.diag(h.gains))
        assert np.all(off == 0.0)
        expected = channel_gain(LuminaireFactory(), PhotoDetectorFactory())
        assert np.allclose(np.diag(h.gains), expected, rtol=1e-12)

    def test_half_metre_grid_has_symmetric_crosstalk(self):
        h = build_channel_matrix(GridLayoutFactory(count=4, spacing=0.5)).gains
        diagonal = np.diag(h)
        assert np.allclose(diagonal, diagonal[0], rtol=1e-12)
        # grid order is (0,0) (0,1) (1,0) (1,1): 0-1 and 0-2 are neighbours, 0-3 is diagonal
        neighbours = [h[0, 1], h[0, 2], h[1, 0], h[1, 3], h[2, 0], h[2, 3], h[3, 1], h[3, 2]]
        assert neighbours[0] > 0
        assert np.allclose(neighbours, neighbours[0], rtol=1e-12)
        assert h[0, 3] == 0.0

    def test_gains_are_read_only(self):
        h = build_channel_matrix(GridLayoutFactory(count=2, spacing=1.0))
        with pytest.raises(ValueError):
            h.gains[0, 0] = 1.0

    def test_rejects_negative_gain(self):
        with pytest.raises(DomainError):
            ChannelMatrix(gains=[[1.0, -0.1], [0.0, 1.0]])

    def test_rejects_empty_layout(self):
        with pytest.raises(DomainError):
            build_channel_matrix(RoomLayoutFactory(luminaires=[]))


class TestGainMap:
    def test_dimensions(self):
        field = gain_map(RoomLayoutFactory(), 0.3)
        assert field.shape == (math.ceil(4.0 / 0.3), math.ceil(4.0 / 0.3))

    def test_single_luminaire_peak_is_beneath_it(self):
        field = gain_map(RoomLayoutFactory(), 0.1)
        x, y, value = field.peak()
        assert abs(x - 2.0) <= 0.1
        assert abs(y - 2.0) <= 0.1
        assert value > 0.0
        assert field.values[0, 0] == 0.0

    def test_mirror_symmetry(self):
        values = gain_map(GridLayoutFactory(count=4, spacing=0.5), 0.1).values
        assert np.allclose(values, values[:, ::-1], rtol=1e-12, atol=0.0)
        assert np.allclose(values, values[::-1, :], rtol=1e-12, atol=0.0)

    def test_lobes_overlap_only_when_close(self):
        centre = 19  # cell centred at 1.95 m
        close = gain_map(GridLayoutFactory(count=4, spacing=0.5), 0.1).values
        apart = gain_map(GridLayoutFactory(count=4, spacing=1.0), 0.1).values
        assert close[centre, centre] > 0.0
        assert apart[centre, centre] == 0.0

    def test_rejects_nonpositive_resolution(self):
        with pytest.raises(DomainError):
            gain_map(RoomLayoutFactory(), 0.0)
