"""Oriented real intervals and the small amount of interval algebra the
dynamics needs (hulls, overlaps, delta-neighbourhoods, affine charts)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Interval:
    """Closed interval with endpoints ``a`` and ``b``.

    The order of ``a`` and ``b`` carries an orientation and is *not*
    assumed increasing; ``lo``/``hi`` give the sorted endpoints.
    """

    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError(f"non-finite endpoint in [{self.a}, {self.b}]")
        if self.a == self.b:
            raise ValueError(f"degenerate interval at {self.a}")

    @classmethod
    def sorted(cls, x: float, y: float) -> "Interval":
        return cls(min(x, y), max(x, y))

    @classmethod
    def hull(cls, points: Iterable[float]) -> "Interval":
        pts = [float(p) for p in points]
        return cls(min(pts), max(pts))

    @property
    def lo(self) -> float:
        return min(self.a, self.b)

    @property
    def hi(self) -> float:
        return max(self.a, self.b)

    @property
    def length(self) -> float:
        return abs(self.b - self.a)

    @property
    def mid(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def endpoints(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def reoriented(self, first: float) -> "Interval":
        """Same set, oriented so that the endpoint nearest ``first`` is ``a``."""
        if abs(self.lo - first) <= abs(self.hi - first):
            return Interval(self.lo, self.hi)
        return Interval(self.hi, self.lo)

    def contains(self, x, tol: float = 0.0):
        return (x >= self.lo - tol) & (x <= self.hi + tol)

    def contains_interior(self, x, tol: float = 0.0):
        return (x > self.lo + tol) & (x < self.hi - tol)

    def contains_interval(self, other: "Interval", tol: float = 0.0) -> bool:
        return other.lo >= self.lo - tol and other.hi <= self.hi + tol

    def strictly_contains(self, other: "Interval", tol: float = 0.0) -> bool:
        """``other`` lies in the interior of ``self`` with clearance > tol."""
        return other.lo > self.lo + tol and other.hi < self.hi - tol

    def overlap(self, other: "Interval") -> float:
        """Length of the intersection (0 when disjoint or touching)."""
        return max(0.0, min(self.hi, other.hi) - max(self.lo, other.lo))

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if hi <= lo:
            return None
        return Interval(lo, hi)

    def distance(self, x):
        """Distance from points (real or complex) to the interval."""
        x = np.asarray(x)
        if np.iscomplexobj(x):
            re = np.clip(x.real, self.lo, self.hi)
            return np.abs(x - re)
        return np.maximum(0.0, np.maximum(self.lo - x, x - self.hi))

    def gap(self, other: "Interval") -> float:
        return max(0.0, max(self.lo, other.lo) - min(self.hi, other.hi))

    def neighborhood(self, delta: float) -> "Interval":
        """The delta-neighbourhood {x : dist(x, J) <= delta |J|}."""
        d = delta * self.length
        return Interval(self.lo - d, self.hi + d)

    def scaled(self, factor: float) -> "Interval":
        h = 0.5 * factor * self.length
        return Interval(self.mid - h, self.mid + h)

    def __repr__(self):
        return f"Interval({self.a!r}, {self.b!r})"


def deep_margin(inner: Interval, outer: Interval) -> float:
    """Largest delta with delta-inner contained in outer (negative if not nested)."""
    return min(inner.lo - outer.lo, outer.hi - inner.hi) / inner.length


def side_margins(inner: Interval, outer: Interval) -> tuple[float, float]:
    """Left and right clearance of ``inner`` inside ``outer`` in units of |inner|."""
    return ((inner.lo - outer.lo) / inner.length, (outer.hi - inner.hi) / inner.length)


def cut_ratio(interval: Interval, x: float) -> float:
    """min/max of the two pieces ``x`` cuts ``interval`` into (0 if outside)."""
    if not interval.contains_interior(x):
        return 0.0
    left, right = x - interval.lo, interval.hi - x
    return min(left, right) / max(left, right)


@dataclass(frozen=True)
class AffineChart:
    """Affine map sending ``source`` onto [-1, 1] with ``anchor`` going to -1."""

    source: Interval
    anchor: float

    @property
    def _far(self) -> float:
        return self.source.hi if abs(self.anchor - self.source.lo) <= abs(self.anchor - self.source.hi) else self.source.lo

    @property
    def _start(self) -> float:
        return self.source.lo if self._far == self.source.hi else self.source.hi

    @property
    def slope(self) -> float:
        return 2.0 / (self._far - self._start)

    def __call__(self, x):
        return -1.0 + self.slope * (np.asarray(x) - self._start)

    def inverse(self, y):
        return self._start + (np.asarray(y) + 1.0) / self.slope


def max_overlap(intervals: list[Interval]) -> float:
    """Largest pairwise overlap length in a family (0 for disjoint interiors)."""
    order = sorted(range(len(intervals)), key=lambda i: intervals[i].lo)
    worst = 0.0
    reach_hi = -np.inf
    for i in order:
        J = intervals[i]
        worst = max(worst, min(reach_hi, J.hi) - J.lo)
        reach_hi = max(reach_hi, J.hi)
    return max(0.0, worst)
