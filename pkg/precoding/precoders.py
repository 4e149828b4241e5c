"""
Channel-inversion precoder, per-word power scaling and the symbol-adaptive
mask that keeps constructive crosstalk between users sending the same bit.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from core.exceptions import DomainError, SingularChannelError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12


def _frozen(array, dtype=float):
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


class PrecoderKind(enum.Enum):
    CI = 'ci'
    OAP = 'oap'


@dataclass(frozen=True)
class SymbolVector:
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in np.asarray(self.bits).ravel())
        if any(b not in (0, 1) for b in bits):
            raise DomainError(f'OOK symbols must be 0 or 1, got {self.bits}')
        object.__setattr__(self, 'bits', bits)

    @property
    def array(self):
        return np.array(self.bits, dtype=float)

    @property
    def ones(self):
        return sum(self.bits)

    @property
    def is_zero(self):
        return self.ones == 0

    def complement(self):
        return SymbolVector(tuple(1 - b for b in self.bits))

    def __len__(self):
        return len(self.bits)


@dataclass(frozen=True)
class Precoder:
    """Unscaled precoding matrix, N_T x N_R"""
    w: np.ndarray
    kind: PrecoderKind = PrecoderKind.CI
    tolerance: float = DEFAULT_TOLERANCE
    condition_number: float = 1.0

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        if not np.all(np.isfinite(w)):
            raise DomainError('precoder has non-finite entries')
        object.__setattr__(self, 'w', _frozen(w))

    @property
    def n_t(self):
        return self.w.shape[0]

    @property
    def n_r(self):
        return self.w.shape[1]


@dataclass(frozen=True)
class AdaptiveMask:
    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DomainError(f'mask must be square, got shape {t.shape}')
        if not np.isin(t, (0, 1)).all():
            raise DomainError('mask entries must be 0 or 1')
        if not (t == t.T).all() or not (np.diag(t) == 1).all():
            raise DomainError('mask must be symmetric with a unit diagonal')
        object.__setattr__(self, 't', _frozen(t, dtype=np.int8))

    @property
    def size(self):
        return self.t.shape[0]


def channel_condition_number(gains):
    """Condition number of H H^T"""
    singular = linalg.svdvals(gains)
    if singular.size == 0 or singular[-1] == 0.0:
        return math.inf
    return float((singular[0] / singular[-1]) ** 2)


def ci_precoder(h, tolerance=DEFAULT_TOLERANCE):
    """
    W = H^T (H H^T)^-1 via the pseudo-inverse.

    Singular values below ``tolerance`` times the largest count as zero;
    if that leaves H without full row rank the channel is rejected.
    """
    gains = h.gains
    condition = channel_condition_number(gains)
    w, rank = linalg.pinv(gains, atol=0.0, rtol=tolerance, return_rank=True)
    if rank < h.n_r:
        raise SingularChannelError(
            f'channel {h.label or "(unnamed)"} has rank {rank} < {h.n_r} receivers '
            f'(cond(HH^T) = {condition:.3g}, tolerance {tolerance:g})',
            condition_number=condition,
            geometry=h.label,
        )
    if condition > 1e8:
        logger.warning('channel %s is ill-conditioned: cond(HH^T) = %.3g', h.label, condition)
    return Precoder(w=w, kind=PrecoderKind.CI, tolerance=tolerance, condition_number=condition)


def scaling_beta(precoder, x):
    """
    Per-word scaling (x^T (H H^T)^-1 x)^(-1/2) = 1 / ||W x||.

    Accepts a Precoder or a ChannelMatrix. The all-zero word gets 1.
    """
    if not isinstance(precoder, Precoder):
        precoder = ci_precoder(precoder)
    x = x if isinstance(x, SymbolVector) else SymbolVector(x)
    if x.is_zero:
        logger.debug('all-zero word, beta defaults to 1')
        return 1.0
    norm = float(np.linalg.norm(precoder.w @ x.array))
    return 1.0 / norm


def adaptive_mask(x):
    """T_kl = 1 iff x_k == x_l"""
    bits = np.asarray((x if isinstance(x, SymbolVector) else SymbolVector(x)).bits)
    return AdaptiveMask(t=(bits[:, None] == bits[None, :]).astype(np.int8))


def oap_precoder(precoder, mask):
    if precoder.n_t != precoder.n_r:
        raise DomainError(f'adaptive precoding needs a square system, got {precoder.n_t}x{precoder.n_r}')
    if mask.size != precoder.n_r:
        raise DomainError(f'mask of size {mask.size} does not fit a {precoder.n_r}-receiver precoder')
    return Precoder(
        w=precoder.w @ mask.t,
        kind=PrecoderKind.OAP,
        tolerance=precoder.tolerance,
        condition_number=precoder.condition_number,
    )


def constructive_group(mask, i):
    """Indices of the users whose signal PD i keeps as constructive interference"""
    if not 0 <= i < mask.size:
        raise DomainError(f'receiver index {i} out of range for {mask.size} receivers')
    return tuple(int(j) for j in np.flatnonzero(mask.t[i]))


def oap_beta(precoder, x, renormalize=False):
    """
    Scaling for the masked precoder.

    By default the CI scaling of the same word is reused, which lets the
    masked transmit vector exceed unit norm; ``renormalize`` scales
    W T x back to unit norm instead.
    """
    x = x if isinstance(x, SymbolVector) else SymbolVector(x)
    if not renormalize or x.is_zero:
        return scaling_beta(precoder, x)
    masked = oap_precoder(precoder, adaptive_mask(x))
    return 1.0 / float(np.linalg.norm(masked.w @ x.array))
