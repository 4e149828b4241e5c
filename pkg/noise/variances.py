"""
Receiver noise: shot and thermal variances of a PIN photodiode front end,
and the swept transmit-SNR convention used by the BER curves.
"""
import enum
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants

from core.exceptions import DomainError


@dataclass(frozen=True)
class NoiseParams:
    q: float = constants.elementary_charge
    bandwidth: float = 1e8
    i_bg: float = 1e-4
    i2: float = 0.562
    i3: float = 0.0868
    k_boltzmann: float = constants.Boltzmann
    temperature: float = 295.0
    open_loop_gain: float = 10.0
    # 112 pF/cm^2
    capacitance_per_area: float = 1.12e-6
    fet_noise_factor: float = 1.5
    fet_transconductance: float = 0.03

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f'noise parameter {name} must be strictly positive, got {value}')

    def as_dict(self):
        return asdict(self)


def shot_variance(channel_row, transmit_signal, responsivity, params):
    """2qB(gamma sum_j h_ij x_j + I_bg I_2)"""
    transmit_signal = np.asarray(transmit_signal, dtype=float)
    if np.any(transmit_signal < 0):
        raise DomainError('transmit signal must be nonnegative for shot noise')
    received = float(np.dot(np.asarray(channel_row, dtype=float), transmit_signal))
    return shot_variance_from_power(received, responsivity, params)


def shot_variance_from_power(received_power, responsivity, params):
    """Shot variance for a received optical power (scalar or array); negative power counts as dark"""
    received_power = np.clip(np.asarray(received_power, dtype=float), 0.0, None)
    value = 2.0 * params.q * params.bandwidth * (responsivity * received_power + params.i_bg * params.i2)
    if value.ndim == 0:
        return float(value)
    return value


def thermal_variance(detector_area, params):
    if detector_area <= 0:
        raise DomainError(f'detector area must be positive, got {detector_area}')
    kt = params.k_boltzmann * params.temperature
    eta, b = params.capacitance_per_area, params.bandwidth
    feedback = 8.0 * math.pi * kt / params.open_loop_gain * eta * detector_area * params.i2 * b ** 2
    fet = (
        16.0 * math.pi ** 2 * kt * params.fet_noise_factor / params.fet_transconductance
        * eta ** 2 * detector_area ** 2 * params.i3 * b ** 3
    )
    return feedback + fet


def total_sigma(shot, thermal):
    shot = np.asarray(shot, dtype=float)
    thermal = np.asarray(thermal, dtype=float)
    if np.any(shot < 0) or np.any(thermal < 0):
        raise DomainError('variances must be nonnegative')
    value = np.sqrt(shot + thermal)
    if value.ndim == 0:
        return float(value)
    return value


def sigma_from_transmit_snr(snr_db, responsivity, power):
    """Noise std such that the transmit SNR (gamma P / sigma)^2 equals snr_db"""
    if power <= 0:
        raise DomainError(f'transmit power must be positive, got {power}')
    if not math.isfinite(snr_db):
        raise DomainError(f'transmit SNR must be finite, got {snr_db}')
    return responsivity * power * 10.0 ** (-snr_db / 20.0)


class NoiseMode(enum.Enum):
    SWEPT = 'swept'
    PHYSICAL = 'physical'
    NOISELESS = 'noiseless'


@dataclass(frozen=True)
class NoiseModel:
    """
    What the BER code asks for a per-PD standard deviation.

    ``swept`` shares one sigma across PDs, ``physical`` evaluates shot and
    thermal noise from the received optical power, ``noiseless`` is the
    sigma = 0 test hook.
    """
    mode: NoiseMode
    sigma_swept: float = 0.0
    params: NoiseParams = NoiseParams()
    responsivity: float = 1.0
    detector_areas: tuple = ()

    @classmethod
    def swept(cls, snr_db, responsivity, power):
        return cls(mode=NoiseMode.SWEPT, sigma_swept=sigma_from_transmit_snr(snr_db, responsivity, power),
                   responsivity=responsivity)

    @classmethod
    def physical(cls, params, responsivity, detector_areas):
        return cls(mode=NoiseMode.PHYSICAL, params=params, responsivity=responsivity,
                   detector_areas=tuple(detector_areas))

    @classmethod
    def noiseless(cls):
        return cls(mode=NoiseMode.NOISELESS)

    @property
    def is_signal_dependent(self):
        return self.mode is NoiseMode.PHYSICAL

    def sigma(self, received_power):
        """Per-PD sigma for received optical powers of shape (..., n_r)"""
        received_power = np.asarray(received_power, dtype=float)
        if self.mode is NoiseMode.NOISELESS:
            return np.zeros_like(received_power)
        if self.mode is NoiseMode.SWEPT:
            return np.full_like(received_power, self.sigma_swept)
        thermal = np.array([thermal_variance(a, self.params) for a in self.detector_areas])
        shot = shot_variance_from_power(received_power, self.responsivity, self.params)
        return np.sqrt(shot + thermal)

    def describe(self):
        if self.mode is NoiseMode.SWEPT:
            return {'mode': self.mode.value, 'sigma': self.sigma_swept}
        if self.mode is NoiseMode.PHYSICAL:
            return {'mode': self.mode.value, **self.params.as_dict()}
        return {'mode': self.mode.value}
