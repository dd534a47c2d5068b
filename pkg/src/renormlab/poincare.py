"""Poincare neighbourhoods D_theta(J) and endpoint sector angles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .intervals import Interval


def subtended_angle(z, J: Interval):
    """Angle at z between the segments to the two endpoints of J (in [0, pi])."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        ang = np.abs(np.angle((J.lo - z) / (J.hi - z)))
    return ang


def poincare_angle(z, J: Interval):
    """Smallest theta with z in the closure of D_theta(J).

    Real points of J give 0 and real points outside J give pi.
    """
    z = np.asarray(z, dtype=complex)
    ang = np.pi - subtended_angle(z, J)
    on_end = (z == J.lo) | (z == J.hi)
    return np.where(on_end, 0.0, ang)


@dataclass(frozen=True)
class PoincareNbhd:
    """D_theta(J): points seeing J under an angle larger than pi - theta."""

    J: Interval
    theta: float

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi:
            raise ValueError("theta must lie in (0, pi)")

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        inside = poincare_angle(z, self.J) < self.theta
        real = z.imag == 0
        return np.where(real, self.J.contains_interior(z.real), inside)

    __contains__ = contains

    def boundary(self, n: int) -> np.ndarray:
        """n points on the upper arc followed by n on the lower arc (counterclockwise)."""
        upper = poincare_arc(self.J, self.theta, n)
        return np.concatenate([upper, np.conj(upper[::-1])])

    def diameter(self) -> float:
        arc = poincare_arc(self.J, self.theta, 257)
        return float(max(self.J.length, 2.0 * np.max(np.abs(arc.imag)), np.ptp(arc.real)))


def poincare_contains(D: PoincareNbhd, z) -> bool:
    return bool(D.contains(z))


def poincare_arc(J: Interval, theta: float, n: int) -> np.ndarray:
    """Upper boundary arc of D_theta(J), from J.hi to J.lo (endpoints excluded)."""
    phi = np.pi - theta
    half = 0.5 * J.length
    center = J.mid + 1j * half / np.tan(phi)
    radius = half / np.sin(phi)
    start = np.angle(J.hi - center)
    stop = np.angle(J.lo - center)
    if stop < start:
        stop += 2 * np.pi
    t = np.linspace(start, stop, n + 2)[1:-1]
    return center + radius * np.exp(1j * t)


@dataclass(frozen=True)
class SectorAngle:
    left: float
    right: float

    @property
    def value(self) -> float:
        return min(self.left, self.right)


def endpoint_angles(z, J: Interval):
    """(angle at the left endpoint, angle at the right endpoint), vectorized.

    The angle at an endpoint is measured between [a_i, z] and the real ray
    from a_i pointing away from J.
    """
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore"):
        left = np.abs(np.angle(J.lo - z))
        right = np.abs(np.angle(z - J.hi))
    return left, right


def angle_to_interval(z: complex, J: Interval) -> SectorAngle:
    if z == J.lo or z == J.hi:
        raise ValueError("angle undefined at an endpoint")
    left, right = endpoint_angles(z, J)
    return SectorAngle(float(left), float(right))


def sector_angle(z, J: Interval):
    left, right = endpoint_angles(z, J)
    return np.minimum(left, right)


def relative_distance(z, J: Interval):
    """dist(z, J) / |J|."""
    return J.distance(z) / J.length
