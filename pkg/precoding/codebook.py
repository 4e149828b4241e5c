"""
Every OOK word of an N-user system with its scaling, mask and scaled precoder.

Both the closed-form BER sums and the Monte Carlo engine index into this
table instead of rebuilding precoders per symbol.
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import DomainError

from .precoders import PrecoderKind

logger = logging.getLogger(__name__)

MAX_USERS = 16


def enumerate_words(n):
    """All 2^n words in binary counting order, most significant bit first"""
    if not 1 <= n <= MAX_USERS:
        raise DomainError(f'number of users must lie in [1, {MAX_USERS}], got {n}')
    shifts = np.arange(n - 1, -1, -1)
    return ((np.arange(2 ** n)[:, None] >> shifts) & 1).astype(np.int8)


def word_index(bits):
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    return index


def _frozen(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SymbolCodebook:
    kind: PrecoderKind
    words: np.ndarray
    betas: np.ndarray
    masks: np.ndarray
    precoders: np.ndarray
    drives: np.ndarray
    renormalized: bool = False

    @property
    def size(self):
        return self.words.shape[0]

    @property
    def n_users(self):
        return self.words.shape[1]

    @property
    def ones(self):
        return self.words.sum(axis=1)

    @property
    def nonzero(self):
        return self.ones > 0

    def mean_beta(self):
        """Average scaling over the words that transmit anything"""
        return float(self.betas[self.nonzero].mean())

    @classmethod
    def build(cls, precoder, kind=PrecoderKind.CI, renormalize=False):
        """
        Scaled precoders beta_s W T_s and drives beta_s W T_s x_s for every word.

        ``precoder`` is the unscaled CI precoder; ``kind`` decides whether the
        adaptive mask is applied.
        """
        if precoder.n_t != precoder.n_r:
            raise DomainError(f'codebook needs a square system, got {precoder.n_t}x{precoder.n_r}')
        words = enumerate_words(precoder.n_r)
        x = words.astype(float)
        ones = words.sum(axis=1)

        norms = np.linalg.norm(x @ precoder.w.T, axis=1)
        betas = np.ones(len(words))
        betas[ones > 0] = 1.0 / norms[ones > 0]

        if kind is PrecoderKind.OAP:
            masks = (words[:, :, None] == words[:, None, :]).astype(np.int8)
            if renormalize:
                # W T x = (number of ones) W x
                betas[ones > 0] /= ones[ones > 0]
        else:
            masks = np.tile(np.eye(precoder.n_r, dtype=np.int8), (len(words), 1, 1))

        precoders = betas[:, None, None] * np.einsum('tk,skr->str', precoder.w, masks)
        drives = np.einsum('str,sr->st', precoders, x)
        logger.debug('built %s codebook of %d words', kind.value, len(words))
        return cls(
            kind=kind,
            words=_frozen(words),
            betas=_frozen(betas),
            masks=_frozen(masks),
            precoders=_frozen(precoders),
            drives=_frozen(drives),
            renormalized=renormalize and kind is PrecoderKind.OAP,
        )
