"""
Outdated channel estimates and the residual mixing they leave behind.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np

from channel.matrix import ChannelMatrix
from core.exceptions import DomainError

logger = logging.getLogger(__name__)


class PerturbationModel(enum.Enum):
    WORST_CASE = 'worst_case'
    UNIFORM = 'uniform'


class SignPolicy(enum.Enum):
    # desired path -E, interference paths +E
    PESSIMISTIC = 'pessimistic'
    PLUS = 'plus'
    MINUS = 'minus'


@dataclass(frozen=True)
class ChannelEstimate:
    h_hat: ChannelMatrix
    true_h: ChannelMatrix
    error_bound: float
    model: PerturbationModel = PerturbationModel.WORST_CASE
    mobile_users: tuple = (0,)

    def __post_init__(self):
        if self.h_hat.gains.shape != self.true_h.gains.shape:
            raise DomainError('estimate and true channel differ in shape')
        excess = np.abs(self.h_hat.gains - self.true_h.gains).max() - self.error_bound
        if excess > 1e-12 * max(self.error_bound, 1.0):
            raise DomainError(f'estimate deviates from the true channel by more than the bound {self.error_bound:g}')

    @property
    def error(self):
        return self.h_hat.gains - self.true_h.gains


def _worst_case_offsets(shape, rows, bound, sign):
    offsets = np.zeros(shape)
    for i in rows:
        if sign is SignPolicy.PLUS:
            offsets[i] = bound
        elif sign is SignPolicy.MINUS:
            offsets[i] = -bound
        else:
            offsets[i] = bound
            if i < shape[1]:
                offsets[i, i] = -bound
    return offsets


def perturb_channel(
    h,
    bound,
    model=PerturbationModel.WORST_CASE,
    seed=None,
    mobile_users=(0,),
    sign=SignPolicy.PESSIMISTIC,
):
    """
    Stale estimate of ``h``: only the rows of the mobile users move, by at
    most ``bound`` per entry, and no gain goes below zero.
    """
    if not bound >= 0:
        raise DomainError(f'error bound must be nonnegative, got {bound}')
    rows = tuple(int(i) for i in mobile_users)
    if any(not 0 <= i < h.n_r for i in rows):
        raise DomainError(f'mobile users {rows} out of range for {h.n_r} receivers')
    model = PerturbationModel(model)

    if model is PerturbationModel.WORST_CASE:
        offsets = _worst_case_offsets(h.gains.shape, rows, bound, SignPolicy(sign))
    else:
        rng = np.random.default_rng(seed)
        offsets = np.zeros(h.gains.shape)
        if rows:
            offsets[list(rows)] = rng.uniform(-bound, bound, size=(len(rows), h.n_t))

    h_hat = np.clip(h.gains + offsets, 0.0, None)
    logger.debug('perturbed rows %s of %s by up to %.3g (%s)', rows, h.label, bound, model.value)
    return ChannelEstimate(
        h_hat=h.with_gains(h_hat, label=f'{h.label} (outdated)'.strip()),
        true_h=h,
        error_bound=bound,
        model=model,
        mobile_users=rows,
    )


def residual_matrix(h, w_hat, beta_hat, mask=None):
    """
    Upsilon = H (beta_hat W_hat T): the mixing the true channel applies to a
    precoder built from the stale estimate.
    """
    gains = h.gains if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=float)
    w = getattr(w_hat, 'w', w_hat)
    precoder = beta_hat * np.asarray(w, dtype=float)
    if mask is not None:
        precoder = precoder @ np.asarray(getattr(mask, 't', mask), dtype=float)
    return gains @ precoder
