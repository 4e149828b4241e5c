import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from channel.layout import grid_layout
from channel.matrix import ChannelMatrix, build_channel_matrix
from core.exceptions import DomainError, SingularChannelError

from .codebook import SymbolCodebook, enumerate_words, word_index
from .precoders import (
    AdaptiveMask,
    PrecoderKind,
    SymbolVector,
    adaptive_mask,
    channel_condition_number,
    ci_precoder,
    constructive_group,
    oap_beta,
    oap_precoder,
    scaling_beta,
)


def perturbed_identity(n):
    """Strictly diagonally dominant channels: I plus small nonnegative crosstalk"""
    return arrays(np.float64, (n, n), elements=st.floats(0.0, 0.2)).map(
        lambda e: ChannelMatrix(gains=np.eye(n) + e / n)
    )


class TestChannelInversion:
    def test_identity(self):
        p = ci_precoder(ChannelMatrix(gains=np.eye(4)))
        np.testing.assert_allclose(p.w, np.eye(4), atol=1e-15)
        assert p.kind is PrecoderKind.CI
        assert p.condition_number == pytest.approx(1.0)

    def test_diagonal(self):
        d = np.array([2.0, 4.0, 0.5])
        p = ci_precoder(ChannelMatrix(gains=np.diag(d)))
        np.testing.assert_allclose(p.w, np.diag(1 / d), rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(h=perturbed_identity(4))
    def test_random_channel_is_inverted(self, h):
        p = ci_precoder(h)
        product = h.gains @ p.w
        np.testing.assert_allclose(product, np.eye(4), atol=1e-9)
        np.testing.assert_allclose(p.w, np.linalg.solve(h.gains, np.eye(4)), rtol=1e-8, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(
        spacing=st.floats(0.5, 1.5),
        semi_angle=st.floats(10.0, 40.0),
        fov=st.floats(15.0, 30.0),
    )
    def test_random_layouts_have_no_interference(self, spacing, semi_angle, fov):
        layout = grid_layout(4, spacing, luminaire={'semi_angle_half_power': semi_angle}, detector={'fov': fov})
        h = build_channel_matrix(layout)
        # some spacings put an eigenvalue of H through zero
        assume(channel_condition_number(h.gains) < 1e8)
        product = h.gains @ ci_precoder(h).w
        off = product - np.diag(np.diag(product))
        assert np.abs(off).max() < 1e-9

    def test_rank_deficient_channel_names_geometry(self):
        h = ChannelMatrix(gains=[[1.0, 1.0], [1.0, 1.0]], label='twin luminaires')
        with pytest.raises(SingularChannelError) as raised:
            ci_precoder(h)
        assert 'twin luminaires' in str(raised.value)
        assert raised.value.geometry == 'twin luminaires'
        assert raised.value.condition_number > 1e12

    def test_more_receivers_than_transmitters(self):
        with pytest.raises(SingularChannelError):
            ci_precoder(ChannelMatrix(gains=np.ones((3, 2))))


class TestScaling:
    def test_identity_channel(self):
        p = ci_precoder(ChannelMatrix(gains=np.eye(4)))
        assert scaling_beta(p, [1, 0, 1, 1]) == pytest.approx(1 / np.sqrt(3))

    def test_accepts_channel_matrix(self):
        assert scaling_beta(ChannelMatrix(gains=np.eye(2)), [1, 1]) == pytest.approx(1 / np.sqrt(2))

    def test_zero_word(self):
        p = ci_precoder(ChannelMatrix(gains=np.eye(3)))
        assert scaling_beta(p, [0, 0, 0]) == 1.0

    @pytest.mark.parametrize('n', range(1, 9))
    @settings(max_examples=20, deadline=None)
    @given(data=st.data())
    def test_every_word_has_unit_power(self, n, data):
        h = data.draw(perturbed_identity(n))
        codebook = SymbolCodebook.build(ci_precoder(h))
        norms = np.linalg.norm(codebook.drives, axis=1)
        np.testing.assert_allclose(norms[1:], 1.0, atol=1e-10)
        assert norms[0] == 0.0

    def test_matches_quadratic_form(self):
        h = ChannelMatrix(gains=[[1.0, 0.3], [0.2, 0.9]])
        x = np.array([1.0, 1.0])
        expected = (x @ np.linalg.inv(h.gains @ h.gains.T) @ x) ** -0.5
        assert scaling_beta(ci_precoder(h), x) == pytest.approx(expected, rel=1e-12)


class TestAdaptiveMask:
    def test_pattern(self):
        t = adaptive_mask([1, 0, 1, 0]).t
        expected = [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
        np.testing.assert_array_equal(t, expected)

    @pytest.mark.parametrize('bits', [(1, 1, 1), (0, 0, 0)])
    def test_all_equal(self, bits):
        np.testing.assert_array_equal(adaptive_mask(bits).t, np.ones((3, 3)))

    @given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=8))
    def test_complement_invariant_and_block_structure(self, bits):
        x = SymbolVector(bits)
        t = adaptive_mask(x).t
        np.testing.assert_array_equal(t, adaptive_mask(x.complement()).t)
        np.testing.assert_array_equal(t, t.T)
        assert (np.diag(t) == 1).all()
        for i, j in itertools.product(range(len(bits)), repeat=2):
            assert t[i, j] == (bits[i] == bits[j])

    def test_group(self):
        mask = adaptive_mask([1, 0, 1, 0])
        assert constructive_group(mask, 0) == (0, 2)
        assert constructive_group(adaptive_mask([1, 1, 1]), 1) == (0, 1, 2)
        for i in range(4):
            assert i in constructive_group(mask, i)

    def test_invalid_mask(self):
        with pytest.raises(DomainError):
            AdaptiveMask(t=[[1, 0], [1, 1]])
        with pytest.raises(DomainError):
            SymbolVector((1, 2))


class TestAdaptivePrecoder:
    def test_identity_mask_keeps_precoder(self):
        p = ci_precoder(ChannelMatrix(gains=[[1.0, 0.2], [0.1, 1.0]]))
        masked = oap_precoder(p, adaptive_mask([1, 0]))
        np.testing.assert_allclose(masked.w, p.w)
        assert masked.kind is PrecoderKind.OAP

    def test_all_ones_mask_sums_columns(self):
        p = ci_precoder(ChannelMatrix(gains=[[1.0, 0.2, 0.0], [0.1, 1.0, 0.3], [0.0, 0.2, 1.0]]))
        masked = oap_precoder(p, adaptive_mask([1, 1, 1]))
        for column in masked.w.T:
            np.testing.assert_allclose(column, p.w.sum(axis=1))

    @pytest.mark.parametrize('n', [2, 4, 8])
    def test_noiseless_amplitude_dominance(self, n):
        h = build_channel_matrix(grid_layout(n, 0.5))
        ci = SymbolCodebook.build(ci_precoder(h), PrecoderKind.CI)
        oap = SymbolCodebook.build(ci_precoder(h), PrecoderKind.OAP)
        words = enumerate_words(n).astype(float)
        ci_received = ci.drives @ h.gains.T
        oap_received = oap.drives @ h.gains.T
        np.testing.assert_allclose(ci_received, ci.betas[:, None] * words, atol=1e-9)
        expected = (oap.betas * words.sum(axis=1))[:, None] * words
        np.testing.assert_allclose(oap_received, expected, atol=1e-9)
        assert (oap_received >= ci_received - 1e-9).all()

    def test_renormalized_scaling(self):
        p = ci_precoder(ChannelMatrix(gains=[[1.0, 0.3], [0.2, 0.9]]))
        x = SymbolVector((1, 1))
        literal = oap_beta(p, x)
        fair = oap_beta(p, x, renormalize=True)
        assert literal == pytest.approx(scaling_beta(p, x))
        assert fair == pytest.approx(literal / 2)
        codebook = SymbolCodebook.build(p, PrecoderKind.OAP, renormalize=True)
        np.testing.assert_allclose(np.linalg.norm(codebook.drives[1:], axis=1), 1.0, atol=1e-12)

    def test_rectangular_system_rejected(self):
        p = ci_precoder(ChannelMatrix(gains=[[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]]))
        with pytest.raises(DomainError):
            oap_precoder(p, adaptive_mask([1, 0]))


class TestCodebook:
    def test_counting_order(self):
        np.testing.assert_array_equal(enumerate_words(1), [[0], [1]])
        np.testing.assert_array_equal(enumerate_words(2), [[0, 0], [0, 1], [1, 0], [1, 1]])
        assert enumerate_words(5).shape == (32, 5)

    def test_word_index(self):
        words = enumerate_words(4)
        assert all(word_index(w) == s for s, w in enumerate(words))

    @pytest.mark.parametrize('n', [0, 17])
    def test_size_limits(self, n):
        with pytest.raises(DomainError):
            enumerate_words(n)

    def test_mean_beta_skips_zero_word(self):
        codebook = SymbolCodebook.build(ci_precoder(ChannelMatrix(gains=np.eye(2))))
        assert codebook.mean_beta() == pytest.approx((1 + 1 + 1 / np.sqrt(2)) / 3)
