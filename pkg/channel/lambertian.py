"""
Line-of-sight optical gain of a Lambertian emitter seen by a detector with
an optical concentrator and filter.

Angles are in degrees at every public function; the radian helpers below
are what the vectorised code paths use.
"""
import math

import numpy as np

from core.exceptions import DomainError


def lambertian_order(semi_angle_half_power):
    """Lambertian order m of an emitter with the given half-power semi-angle"""
    if not 0.0 < semi_angle_half_power < 90.0:
        raise DomainError(
            f'semi-angle at half power must lie in (0, 90) degrees, got {semi_angle_half_power}'
        )
    m = -math.log(2.0) / math.log(math.cos(math.radians(semi_angle_half_power)))
    # cos() of whole-degree angles lands an ulp away from 1/2, 2^-1/2, ...
    if math.isclose(m, round(m), rel_tol=1e-12):
        m = float(round(m))
    return m


def concentrator_gain(incidence_angle, fov, n):
    """Gain of a non-imaging concentrator: n^2 / sin^2(fov) inside the FOV, 0 outside"""
    if n < 1.0:
        raise DomainError(f'refractive index must be >= 1, got {n}')
    if incidence_angle > fov:
        return 0.0
    return n ** 2 / math.sin(math.radians(fov)) ** 2


def radiant_intensity(emergence_angle, m):
    """Normalised Lambertian radiant intensity (m+1)/(2pi) cos^m(phi)"""
    if m <= 0:
        raise DomainError(f'Lambertian order must be positive, got {m}')
    return radiant_intensity_cos(math.cos(math.radians(emergence_angle)), m)


def radiant_intensity_cos(cos_emergence, m):
    # cos(90 deg) is ~6e-17, not 0
    cos_emergence = np.where(np.abs(cos_emergence) < 1e-12, 0.0, cos_emergence)
    value = (m + 1.0) / (2.0 * math.pi) * np.power(np.clip(cos_emergence, 0.0, None), m)
    if np.ndim(value) == 0:
        return float(value)
    return value


def varpi(m, area, filter_gain, concentrator, plane_separation=1.0):
    """
    Distance-independent factor of the simplified gain h = varpi / d^(m+3).

    Substituting cos(phi) = cos(psi) = z/d leaves a z^(m+1) factor behind;
    it is folded in here so the simplified model agrees with the full one
    on parallel planes. With the default z = 1 this is (m+1) A Ts g / 2pi.
    """
    return (m + 1.0) * area * filter_gain * concentrator * plane_separation ** (m + 1.0) / (2.0 * math.pi)


def simplified_gain(distance, varpi_value, m):
    """Distance-only channel gain varpi / d^(m+3)"""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise DomainError(f'distance must be positive, got {distance}')
    value = varpi_value / np.power(distance, m + 3.0)
    if value.ndim == 0:
        return float(value)
    return value


def channel_gain(led, pd):
    """
    DC gain of the LOS path from one luminaire to one photodetector.

    The luminaire is a point source; emergence and incidence angles are
    measured against the device orientation vectors.
    """
    offset = np.asarray(pd.position, dtype=float) - np.asarray(led.position, dtype=float)
    distance = float(np.linalg.norm(offset))
    if distance == 0.0:
        raise DomainError(f'luminaire and detector coincide at {tuple(led.position)}')
    direction = offset / distance

    cos_emergence = float(np.dot(direction, led.orientation))
    cos_incidence = float(np.dot(-direction, pd.orientation))
    if cos_emergence <= 0.0 or cos_incidence <= 0.0:
        return 0.0

    incidence = math.degrees(math.acos(min(cos_incidence, 1.0)))
    g = concentrator_gain(incidence, pd.fov, pd.refractive_index)
    if g == 0.0:
        return 0.0

    intensity = radiant_intensity_cos(cos_emergence, led.lambertian_order)
    return pd.area / distance ** 2 * intensity * pd.filter_gain * g * cos_incidence
