"""
Closed-form bit error rates of CI and OAP precoding.

Each OOK word is equally likely; every word fixes the bit x_i a PD
receives, so it adds exactly one Q-term per PD. Under perfect CSI the sums
are exact for the genie-threshold receiver; under outdated CSI they are
upper bounds.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from core.exceptions import DomainError
from precoding.codebook import MAX_USERS, enumerate_words
from precoding.precoders import DEFAULT_TOLERANCE, PrecoderKind, ci_precoder

from .links import LinkTable, noise_ratio

logger = logging.getLogger(__name__)


def q_function(x):
    """Gaussian tail probability Q(x) = erfc(x / sqrt 2) / 2"""
    value = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    if np.ndim(value) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class CombinationMatrix:
    a: np.ndarray

    @property
    def n_t(self):
        return self.a.shape[1]

    def __len__(self):
        return self.a.shape[0]


def combination_matrix(n_t):
    if not 1 <= n_t <= MAX_USERS:
        raise DomainError(f'combination matrix is limited to 1..{MAX_USERS} transmitters, got {n_t}')
    return CombinationMatrix(a=enumerate_words(n_t))


class CsiMode(enum.Enum):
    PERFECT = 'perfect'
    OUTDATED = 'outdated'


@dataclass(frozen=True)
class BerResult:
    per_pd: tuple
    scheme: PrecoderKind
    csi: CsiMode = CsiMode.PERFECT

    def __post_init__(self):
        per_pd = tuple(float(p) for p in self.per_pd)
        upper = 1.0 if self.is_bound else 0.5
        if any(not 0.0 <= p <= upper + 1e-12 for p in per_pd):
            raise DomainError(f'BER values out of range: {per_pd}')
        object.__setattr__(self, 'per_pd', per_pd)

    @property
    def is_bound(self):
        return self.csi is CsiMode.OUTDATED

    @property
    def average(self):
        return math.fsum(self.per_pd) / len(self.per_pd)

    @property
    def mode(self):
        return self.scheme, self.csi


def _average_over_words(terms):
    # rows are words; fsum per PD keeps the reduction independent of layout
    return tuple(math.fsum(column) / terms.shape[0] for column in terms.T)


def _result(terms, scheme, csi):
    per_pd = _average_over_words(terms)
    result = BerResult(per_pd=per_pd, scheme=scheme, csi=csi)
    if result.is_bound and max(per_pd) > 0.5:
        logger.warning('%s outdated-CSI bound exceeds 1/2 (max %.3g); it is not clipped', scheme.value, max(per_pd))
    return result


def _table(h, kind, responsivity, power, h_hat=None, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    if isinstance(h, LinkTable):
        return h
    return LinkTable.build(h, kind, responsivity, power, h_hat=h_hat, renormalize=renormalize, tolerance=tolerance)


def _ci_margins(table):
    """Distance of the noiseless CI photocurrent from its threshold"""
    return 0.5 * table.gamma_p * table.desired


def _oap_margins(table):
    half = 0.5 * table.gamma_p * table.desired
    return np.where(table.words > 0, half + table.gamma_p * table.constructive(), half)


def ber_ci_perfect(h, noise, responsivity, power, tolerance=DEFAULT_TOLERANCE):
    """Q(gamma P Upsilon_ii / 2 sigma_i) averaged over words"""
    table = _table(h, PrecoderKind.CI, responsivity, power, tolerance=tolerance)
    terms = q_function(noise_ratio(_ci_margins(table), table.sigmas(noise)))
    return _result(terms, PrecoderKind.CI, CsiMode.PERFECT)


def ber_oap_perfect(h, noise, responsivity, power, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    """
    A one at PD i also collects the other members of its constructive group;
    a zero sits half the desired amplitude below the threshold.
    """
    table = _table(h, PrecoderKind.OAP, responsivity, power, renormalize=renormalize, tolerance=tolerance)
    terms = q_function(noise_ratio(_oap_margins(table), table.sigmas(noise)))
    return _result(terms, PrecoderKind.OAP, CsiMode.PERFECT)


def _inverse_drift(w, error_norm):
    """Bound on ||W_hat - W||_2 when the channel moves by at most error_norm"""
    if error_norm == 0.0:
        return 0.0
    w_norm = np.linalg.norm(w, 2)
    if w_norm * error_norm >= 1.0:
        return math.inf
    return w_norm ** 2 * error_norm / (1.0 - w_norm * error_norm)


def _column_drift(omega, v_norm, wv_norm, codebook, w):
    """
    Bound on ||(beta_hat W_hat - beta W) v|| for per-word vectors v.

    ``v_norm`` and ``wv_norm`` hold ||v|| and ||W v|| with the word on the
    first axis. Both scalings are c_s / ||W x_s|| with the same c_s.
    """
    if omega == 0.0:
        return np.zeros_like(v_norm)
    extra = (1,) * (v_norm.ndim - 1)
    x = codebook.words.astype(float)
    a = np.linalg.norm(x @ w.T, axis=1)
    x_norm = np.linalg.norm(x, axis=1)
    c = codebook.betas * a
    with np.errstate(invalid='ignore'):
        a_low = a - omega * x_norm
    a, x_norm, c, a_low = (np.reshape(arr, arr.shape + extra) for arr in (a, x_norm, c, a_low))
    nonzero = np.reshape(codebook.nonzero, codebook.nonzero.shape + extra)
    with np.errstate(divide='ignore', invalid='ignore'):
        scaled = c * (omega * v_norm / a_low + wv_norm * omega * x_norm / (a * a_low))
        drift = np.where(nonzero, np.where(a_low > 0, scaled, np.inf), omega * v_norm)
    return np.where(v_norm > 0, drift, 0.0)


def _outdated_terms(h, h_hat, noise, kind, responsivity, power, renormalize, tolerance):
    """
    Per-word Q-terms bounding the error of precoding with the stale H_hat.

    Each margin starts from its perfect-CSI value and loses the largest
    shift the estimate error could cause in the amplitude and the threshold.
    The shift is a function of ||H_hat - H|| only, so the bound grows with
    the error and equals the perfect-CSI terms when H_hat = H.
    """
    perfect = LinkTable.build(h, kind, responsivity, power, renormalize=renormalize, tolerance=tolerance)
    stale = LinkTable.build(h, kind, responsivity, power, h_hat=h_hat, renormalize=renormalize, tolerance=tolerance)
    margins = _ci_margins(perfect) if kind is PrecoderKind.CI else _oap_margins(perfect)
    perfect_terms = q_function(noise_ratio(margins, perfect.sigmas(noise)))

    w = ci_precoder(h, tolerance).w
    codebook = perfect.codebook
    error = np.asarray(h_hat.gains, dtype=float) - np.asarray(h.gains, dtype=float)
    omega = _inverse_drift(w, float(np.linalg.norm(error)))
    if omega == 0.0:
        return perfect_terms

    masks = codebook.masks.astype(float)
    # drive direction T_s x_s and the columns of T_s
    drive = np.einsum('sij,sj->si', masks, perfect.words)
    drive_drift = _column_drift(
        omega,
        np.linalg.norm(drive, axis=1),
        np.linalg.norm(drive @ w.T, axis=1),
        codebook,
        w,
    )
    column_drift = _column_drift(
        omega,
        np.linalg.norm(masks, axis=1),
        np.linalg.norm(np.einsum('tk,ski->sti', w, masks), axis=1),
        codebook,
        w,
    )
    row_norms = np.linalg.norm(h.gains, axis=1)
    error_rows = np.linalg.norm(error, axis=1)
    column_norms = np.linalg.norm(codebook.precoders, axis=1)

    amplitude_shift = row_norms * drive_drift[:, None]
    with np.errstate(invalid='ignore'):
        estimate_shift = np.where(error_rows > 0, error_rows * (column_norms + column_drift), 0.0)
    threshold_shift = 0.5 * (estimate_shift + row_norms * column_drift)
    shifted = margins - perfect.gamma_p * (amplitude_shift + threshold_shift)
    if not np.isfinite(shifted).all():
        logger.debug('%s outdated bound saturates on some words', kind.value)
    bound_terms = q_function(noise_ratio(shifted, stale.sigmas(noise)))
    return np.maximum(bound_terms, perfect_terms)


def ber_ci_outdated(h, h_hat, noise, responsivity, power, tolerance=DEFAULT_TOLERANCE):
    terms = _outdated_terms(h, h_hat, noise, PrecoderKind.CI, responsivity, power, False, tolerance)
    return _result(terms, PrecoderKind.CI, CsiMode.OUTDATED)


def ber_oap_outdated(h, h_hat, noise, responsivity, power, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    terms = _outdated_terms(h, h_hat, noise, PrecoderKind.OAP, responsivity, power, renormalize, tolerance)
    return _result(terms, PrecoderKind.OAP, CsiMode.OUTDATED)


def analytic_ber(scheme, h, noise, responsivity, power, h_hat=None, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    """Dispatch to the closed form for a scheme and CSI state"""
    scheme = PrecoderKind(scheme)
    if h_hat is None:
        if scheme is PrecoderKind.CI:
            return ber_ci_perfect(h, noise, responsivity, power, tolerance=tolerance)
        return ber_oap_perfect(h, noise, responsivity, power, renormalize=renormalize, tolerance=tolerance)
    if scheme is PrecoderKind.CI:
        return ber_ci_outdated(h, h_hat, noise, responsivity, power, tolerance=tolerance)
    return ber_oap_outdated(h, h_hat, noise, responsivity, power, renormalize=renormalize, tolerance=tolerance)


def snr_at_ber(ber_at, target=1e-3, low=0.0, high=120.0, xtol=1e-6):
    """
    Transmit SNR in dB where ``ber_at(snr_db)`` crosses ``target``.

    Root search on log10(BER) inside [low, high]; the bracket must straddle
    the target.
    """
    if not 0.0 < target < 0.5:
        raise DomainError(f'target BER must lie in (0, 0.5), got {target}')

    def gap(snr_db):
        return math.log10(max(ber_at(snr_db), 1e-300)) - math.log10(target)

    g_low, g_high = gap(low), gap(high)
    if g_low * g_high > 0:
        raise DomainError(f'BER does not cross {target:g} between {low:g} and {high:g} dB')
    return optimize.brentq(gap, low, high, xtol=xtol)
