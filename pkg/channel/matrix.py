"""
MIMO channel matrix and receiver-plane gain maps.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import DomainError

from .lambertian import channel_gain
from .layout import PhotoDetector

logger = logging.getLogger(__name__)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ChannelMatrix:
    """N_R x N_T optical gains; row i is detector i, column j is luminaire j"""
    gains: np.ndarray
    label: str = ''

    def __post_init__(self):
        gains = np.atleast_2d(self.gains)
        if gains.ndim != 2:
            raise DomainError(f'channel gains must be a matrix, got shape {gains.shape}')
        if not np.all(np.isfinite(gains)):
            raise DomainError(f'channel {self.label!r} has non-finite gains')
        if np.any(gains < 0):
            raise DomainError(f'channel {self.label!r} has negative gains')
        object.__setattr__(self, 'gains', _frozen(gains))

    @property
    def n_r(self):
        return self.gains.shape[0]

    @property
    def n_t(self):
        return self.gains.shape[1]

    @property
    def is_square(self):
        return self.n_r == self.n_t

    def row(self, i):
        return self.gains[i]

    def with_gains(self, gains, label=None):
        return ChannelMatrix(gains=gains, label=self.label if label is None else label)


def build_channel_matrix(layout):
    if not layout.luminaires:
        raise DomainError('layout has no luminaires')
    if not layout.detectors:
        raise DomainError('layout has no detectors')
    gains = np.array(
        [[channel_gain(led, pd) for led in layout.luminaires] for pd in layout.detectors]
    )
    logger.debug('built %dx%d channel for %s', gains.shape[0], gains.shape[1], layout.label)
    return ChannelMatrix(gains=gains, label=layout.label)


@dataclass(frozen=True)
class GainMap:
    """Total LOS gain sampled at cell centres of the receiver plane; values[iy, ix]"""
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    resolution: float

    @property
    def shape(self):
        return self.values.shape

    def peak(self):
        iy, ix = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.xs[ix]), float(self.ys[iy]), float(self.values[iy, ix])

    def rows(self):
        """CSV rows: one per y index, one column per x index"""
        return [list(map(float, row)) for row in self.values]


def gain_map(layout, grid_resolution, probe=None):
    """
    Sum of the gains from every luminaire at each grid point of the receiver plane.

    The probe defaults to the first detector of the layout (or a default
    detector when there is none), moved across the plane.
    """
    if not grid_resolution > 0:
        raise DomainError(f'grid resolution must be positive, got {grid_resolution}')
    if probe is None:
        if layout.detectors:
            probe = layout.detectors[0]
        else:
            probe = PhotoDetector(position=(0.0, 0.0, layout.receiver_plane_z))

    nx = math.ceil(layout.room_x / grid_resolution)
    ny = math.ceil(layout.room_y / grid_resolution)
    xs = (np.arange(nx) + 0.5) * layout.room_x / nx
    ys = (np.arange(ny) + 0.5) * layout.room_y / ny

    values = np.zeros((ny, nx))
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            pd = probe.moved_to(float(x), float(y))
            values[iy, ix] = math.fsum(channel_gain(led, pd) for led in layout.luminaires)

    logger.debug('gain map %dx%d at %g m for %s', ny, nx, grid_resolution, layout.label)
    return GainMap(xs=_frozen(xs), ys=_frozen(ys), values=_frozen(values), resolution=grid_resolution)
