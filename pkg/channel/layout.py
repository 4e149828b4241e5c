"""
Room geometry: luminaires on the ceiling, photodetectors on the receiver plane.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from core.exceptions import DomainError

from .lambertian import lambertian_order

DOWN = (0.0, 0.0, -1.0)
UP = (0.0, 0.0, 1.0)


def _unit(vector, label):
    vector = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(vector)
    if vector.shape != (3,) or norm == 0.0:
        raise DomainError(f'{label} orientation must be a non-zero 3-vector, got {tuple(vector)}')
    return tuple(float(v) for v in vector / norm)


@dataclass(frozen=True)
class Luminaire:
    """A luminaire treated as one point source of total power leds x power_per_led"""
    position: tuple
    semi_angle_half_power: float = 15.0
    leds_per_luminaire: int = 3600
    power_per_led: float = 0.01
    orientation: tuple = DOWN

    def __post_init__(self):
        if not 0.0 < self.semi_angle_half_power < 90.0:
            raise DomainError(f'semi-angle must lie in (0, 90) degrees, got {self.semi_angle_half_power}')
        if self.power_per_led <= 0:
            raise DomainError(f'power per LED must be positive, got {self.power_per_led}')
        if self.leds_per_luminaire < 1:
            raise DomainError(f'a luminaire needs at least one LED, got {self.leds_per_luminaire}')
        object.__setattr__(self, 'position', tuple(float(p) for p in self.position))
        object.__setattr__(self, 'orientation', _unit(self.orientation, 'luminaire'))

    @cached_property
    def lambertian_order(self):
        return lambertian_order(self.semi_angle_half_power)

    @property
    def power(self):
        return self.leds_per_luminaire * self.power_per_led


@dataclass(frozen=True)
class PhotoDetector:
    """A PD with optical filter and concentrator"""
    position: tuple
    area: float = 1e-4
    fov: float = 15.0
    responsivity: float = 1.0
    refractive_index: float = 1.5
    filter_gain: float = 1.0
    orientation: tuple = UP

    def __post_init__(self):
        if self.area <= 0:
            raise DomainError(f'detector area must be positive, got {self.area}')
        if not 0.0 < self.fov <= 90.0:
            raise DomainError(f'FOV must lie in (0, 90] degrees, got {self.fov}')
        if self.responsivity <= 0:
            raise DomainError(f'responsivity must be positive, got {self.responsivity}')
        if self.refractive_index < 1.0:
            raise DomainError(f'refractive index must be >= 1, got {self.refractive_index}')
        if not 0.0 < self.filter_gain <= 1.0:
            raise DomainError(f'filter gain must lie in (0, 1], got {self.filter_gain}')
        object.__setattr__(self, 'position', tuple(float(p) for p in self.position))
        object.__setattr__(self, 'orientation', _unit(self.orientation, 'detector'))

    def moved_to(self, x, y):
        """Same detector at another point of its plane"""
        return PhotoDetector(
            position=(x, y, self.position[2]),
            area=self.area,
            fov=self.fov,
            responsivity=self.responsivity,
            refractive_index=self.refractive_index,
            filter_gain=self.filter_gain,
            orientation=self.orientation,
        )


@dataclass(frozen=True)
class RoomLayout:
    room_x: float
    room_y: float
    room_z: float
    receiver_plane_z: float
    luminaires: tuple = field(default_factory=tuple)
    detectors: tuple = field(default_factory=tuple)
    label: str = ''

    def __post_init__(self):
        if min(self.room_x, self.room_y, self.room_z) <= 0:
            raise DomainError(
                f'room dimensions must be positive, got {self.room_x} x {self.room_y} x {self.room_z}'
            )
        if self.receiver_plane_z < 0:
            raise DomainError(f'receiver plane height must be >= 0, got {self.receiver_plane_z}')
        object.__setattr__(self, 'luminaires', tuple(self.luminaires))
        object.__setattr__(self, 'detectors', tuple(self.detectors))
        for led in self.luminaires:
            self._check_inside(led.position, 'luminaire')
            if led.position[2] <= self.receiver_plane_z:
                raise DomainError(
                    f'luminaire at {led.position} is not above the receiver plane z={self.receiver_plane_z}'
                )
        for pd in self.detectors:
            self._check_inside(pd.position, 'detector')

    def _check_inside(self, position, what):
        x, y, z = position
        if not (0.0 <= x <= self.room_x and 0.0 <= y <= self.room_y and 0.0 <= z <= self.room_z):
            raise DomainError(
                f'{what} at {position} lies outside the {self.room_x} x {self.room_y} x {self.room_z} m room'
            )

    @property
    def plane_separation(self):
        heights = {led.position[2] for led in self.luminaires}
        if len(heights) != 1:
            raise DomainError('luminaires are not on a single plane')
        return heights.pop() - self.receiver_plane_z

    @property
    def transmit_power(self):
        """Common luminaire power P; the precoding model assumes every luminaire has the same"""
        powers = {led.power for led in self.luminaires}
        if len(powers) != 1:
            raise DomainError(f'luminaires have different powers: {sorted(powers)}')
        return powers.pop()

    @property
    def responsivity(self):
        values = {pd.responsivity for pd in self.detectors}
        if len(values) != 1:
            raise DomainError(f'detectors have different responsivities: {sorted(values)}')
        return values.pop()


def grid_shape(count):
    """rows x cols for count devices: rows is the largest divisor not above sqrt(count)"""
    if count < 1:
        raise DomainError(f'need at least one luminaire, got {count}')
    rows = max(r for r in range(1, math.isqrt(count) + 1) if count % r == 0)
    return rows, count // rows


def grid_layout(
    count,
    spacing,
    room=(4.0, 4.0, 3.0),
    receiver_plane_z=0.75,
    luminaire_height=None,
    luminaire=None,
    detector=None,
):
    """
    Luminaires on a grid centered in the room, one detector directly beneath each.

    ``luminaire`` and ``detector`` are keyword dicts for the device
    parameters (position is filled in here).
    """
    if spacing <= 0:
        raise DomainError(f'spacing must be positive, got {spacing}')
    room_x, room_y, room_z = room
    height = room_z if luminaire_height is None else luminaire_height
    rows, cols = grid_shape(count)
    luminaire = luminaire or {}
    detector = detector or {}

    luminaires = []
    detectors = []
    for r in range(rows):
        for c in range(cols):
            x = room_x / 2.0 + (c - (cols - 1) / 2.0) * spacing
            y = room_y / 2.0 + (r - (rows - 1) / 2.0) * spacing
            luminaires.append(Luminaire(position=(x, y, height), **luminaire))
            detectors.append(PhotoDetector(position=(x, y, receiver_plane_z), **detector))

    return RoomLayout(
        room_x=room_x,
        room_y=room_y,
        room_z=room_z,
        receiver_plane_z=receiver_plane_z,
        luminaires=luminaires,
        detectors=detectors,
        label=f'{count}x{count} grid {rows}x{cols}, spacing {spacing:g} m',
    )
