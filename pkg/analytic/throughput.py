import math

import numpy as np

from precoding.precoders import DEFAULT_TOLERANCE, PrecoderKind

from .links import LinkTable, noise_ratio


def sinr_report(h, responsivity, power, sigma):
    """
    Unprecoded per-PD SINR, gamma P h_ii / (gamma P sum_{j != i} h_ij + 2 sigma_i).

    The denominator adds a standard deviation to an amplitude. Reporting
    only, never used for BER or throughput.
    """
    gains = h.gains
    gamma_p = responsivity * power
    desired = np.diagonal(gains)
    interference = gains.sum(axis=1) - desired
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), desired.shape)
    return tuple(float(v) for v in noise_ratio(gamma_p * desired, gamma_p * interference + 2.0 * sigma))


def throughput_per_word(scheme, h, noise, responsivity, power, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    """
    Normalised sum throughput in bit/s/Hz of every OOK word.

    CI counts log2(1 + gamma P Upsilon_ii / 2 sigma_i) for every PD; OAP counts
    log2(1 + gamma P / 2 sigma_i sum_{j in G(i)} Upsilon_ij x_j), which is zero
    for PDs receiving a zero. The all-zero word carries nothing.
    """
    scheme = PrecoderKind(scheme)
    table = h if isinstance(h, LinkTable) else LinkTable.build(
        h, scheme, responsivity, power, renormalize=renormalize, tolerance=tolerance
    )
    sigma = table.sigmas(noise)
    if scheme is PrecoderKind.CI:
        useful = table.desired
    else:
        masks = table.codebook.masks.astype(float)
        useful = np.einsum('sij,sij,sj->si', masks, table.upsilon, table.words)
    snr = noise_ratio(0.5 * table.gamma_p * useful, sigma)
    per_word = np.log2(1.0 + np.clip(snr, 0.0, None)).sum(axis=1)
    per_word[~table.codebook.nonzero] = 0.0
    return per_word


def throughput(scheme, h, noise, responsivity, power, renormalize=False, tolerance=DEFAULT_TOLERANCE):
    """Sum throughput averaged over all OOK words"""
    per_word = throughput_per_word(scheme, h, noise, responsivity, power, renormalize, tolerance)
    return math.fsum(per_word) / len(per_word)
