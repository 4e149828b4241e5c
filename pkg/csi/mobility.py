"""
Worst-case channel error caused by a user moving between CSI updates.
"""
import math
from dataclasses import dataclass

import numpy as np

from channel.lambertian import channel_gain
from core.exceptions import DomainError


@dataclass(frozen=True)
class MobilityEvent:
    """
    A receiver moving on its plane from start_xy to end_xy in elapsed_time.

    Distances to the serving luminaire are measured from anchor_xy, the
    luminaire's projection on the receiver plane.
    """
    start_xy: tuple
    end_xy: tuple
    plane_separation: float
    elapsed_time: float
    anchor_xy: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not self.elapsed_time > 0:
            raise DomainError(f'elapsed time must be positive, got {self.elapsed_time}')
        if not self.plane_separation > 0:
            raise DomainError(f'plane separation must be positive, got {self.plane_separation}')
        for name in ('start_xy', 'end_xy', 'anchor_xy'):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 2 or not all(math.isfinite(v) for v in value):
                raise DomainError(f'{name} must be a finite (x, y) pair, got {getattr(self, name)}')
            object.__setattr__(self, name, value)

    @classmethod
    def from_velocity(cls, start_xy, heading_xy, velocity, elapsed_time, plane_separation, anchor_xy=(0.0, 0.0)):
        if velocity < 0:
            raise DomainError(f'velocity must be nonnegative, got {velocity}')
        heading = np.asarray(heading_xy, dtype=float)
        norm = np.linalg.norm(heading)
        if norm == 0.0:
            raise DomainError('heading must be a non-zero vector')
        end = np.asarray(start_xy, dtype=float) + heading / norm * velocity * elapsed_time
        return cls(
            start_xy=tuple(start_xy),
            end_xy=tuple(end),
            plane_separation=plane_separation,
            elapsed_time=elapsed_time,
            anchor_xy=tuple(anchor_xy),
        )

    @property
    def displacement(self):
        return math.dist(self.start_xy, self.end_xy)

    @property
    def max_velocity(self):
        return self.displacement / self.elapsed_time

    def _distance(self, xy):
        return math.hypot(xy[0] - self.anchor_xy[0], xy[1] - self.anchor_xy[1], self.plane_separation)

    @property
    def start_distance(self):
        return self._distance(self.start_xy)

    @property
    def end_distance(self):
        return self._distance(self.end_xy)

    def within(self, room_x, room_y):
        return all(0.0 <= x <= room_x and 0.0 <= y <= room_y for x, y in (self.start_xy, self.end_xy))


def error_bound(event, varpi, m):
    """varpi |d2^-(m+3) - d1^-(m+3)|"""
    d1, d2 = event.start_distance, event.end_distance
    return varpi * abs(d2 ** -(m + 3.0) - d1 ** -(m + 3.0))


def error_bound_full_geometry(event, led, pd):
    """
    Same bound from the full LOS model at both end points.

    Unlike the distance-only form this sees the FOV cutoff, so a move out
    of the field of view yields the whole start gain.
    """
    start = channel_gain(led, pd.moved_to(*event.start_xy))
    end = channel_gain(led, pd.moved_to(*event.end_xy))
    return abs(end - start)
