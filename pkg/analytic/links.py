"""
Per-word link quantities shared by the closed-form BER and throughput sums.

For every OOK word s the transmitter applies P_s = beta_s W T_s, built from
whatever channel it believes in (H itself, or a stale estimate H_hat).
The true mixing Upsilon_s = H P_s sets the received means; the nominal
mixing N_s = H_hat P_s sets the detection thresholds.
"""
from dataclasses import dataclass

import numpy as np

from precoding.codebook import SymbolCodebook
from precoding.precoders import DEFAULT_TOLERANCE, PrecoderKind, ci_precoder


@dataclass(frozen=True)
class LinkTable:
    codebook: SymbolCodebook
    upsilon: np.ndarray
    nominal: np.ndarray
    responsivity: float
    power: float

    @classmethod
    def build(cls, h, kind, responsivity, power, h_hat=None, renormalize=False, tolerance=DEFAULT_TOLERANCE):
        believed = h if h_hat is None else h_hat
        codebook = SymbolCodebook.build(ci_precoder(believed, tolerance), PrecoderKind(kind), renormalize)
        upsilon = np.einsum('rt,stk->srk', h.gains, codebook.precoders)
        nominal = upsilon if h_hat is None else np.einsum('rt,stk->srk', h_hat.gains, codebook.precoders)
        return cls(codebook=codebook, upsilon=upsilon, nominal=nominal, responsivity=responsivity, power=power)

    @property
    def gamma_p(self):
        return self.responsivity * self.power

    @property
    def kind(self):
        return self.codebook.kind

    @property
    def words(self):
        return self.codebook.words.astype(float)

    @property
    def n_users(self):
        return self.codebook.n_users

    @property
    def is_outdated(self):
        return self.nominal is not self.upsilon

    @property
    def desired(self):
        """Upsilon_ii per word, shape (S, N)"""
        return np.diagonal(self.upsilon, axis1=1, axis2=2)

    @property
    def error(self):
        return self.upsilon - self.nominal

    def received_optical_power(self):
        """P (Upsilon_s x_s), clamped at zero; drives the shot noise"""
        return np.clip(self.power * np.einsum('srk,sk->sr', self.upsilon, self.words), 0.0, None)

    def amplitudes(self):
        """Noiseless photocurrents gamma P (Upsilon_s x_s)"""
        return self.gamma_p * np.einsum('srk,sk->sr', self.upsilon, self.words)

    def thresholds(self):
        """Genie thresholds: half the amplitude the transmitter expects for a one"""
        return 0.5 * self.gamma_p * np.diagonal(self.nominal, axis1=1, axis2=2)

    def constructive(self):
        """sum over G(i) minus i of Upsilon_ij, per word and PD"""
        masks = self.codebook.masks.astype(float)
        return np.einsum('sij,sij->si', masks, self.upsilon) - self.desired

    def sigmas(self, noise):
        return noise.sigma(self.received_optical_power())


def noise_ratio(numerator, sigma):
    """numerator / sigma, with sigma = 0 mapped to +-inf (and 0 / 0 to 0)"""
    numerator = np.asarray(numerator, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), numerator.shape)
    with np.errstate(invalid='ignore'):
        out = np.sign(numerator) * np.inf
    np.divide(numerator, sigma, out=out, where=sigma > 0)
    return np.nan_to_num(out, nan=0.0, posinf=np.inf, neginf=-np.inf)
