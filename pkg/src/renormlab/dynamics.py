"""Interval dynamics: symmetrization, monotone pullbacks, maximal intervals of
monotonicity, nice sets and first-entry domains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BranchAmbiguity, BranchBlocked, CriticalOrbit, NotLocallyUnimodal
from .intervals import Interval
from .maps import TAU_ROOT, AnalyticMap, CriticalPoint

GEOM_REL = 1e-11


def tau_geom(fmap: AnalyticMap) -> float:
    return GEOM_REL * fmap.scale


def interval_orbit(fmap: AnalyticMap, J: Interval, n: int) -> list[Interval]:
    """[J, f(J), ..., f^n(J)] computed with exact interval images."""
    out = [J]
    for _ in range(n):
        J = fmap.image(J)
        out.append(J)
    return out


def critical_points_in(fmap: AnalyticMap, J: Interval, tol: float = 0.0) -> list[CriticalPoint]:
    return [c for c in fmap.critical_points if J.contains_interior(c.position, tol)]


def lap_of_interval(fmap: AnalyticMap, J: Interval, tol: float = 0.0) -> int:
    """Index of the lap containing J; raise BranchBlocked if J straddles a critical point."""
    inside = critical_points_in(fmap, J, tol)
    if inside:
        raise BranchBlocked(f"{J} contains the critical point {inside[0].position:.17g}")
    return fmap.lap_index(J.mid)


def monotone_preimage(fmap: AnalyticMap, idx: int, U: Interval, clip: bool = False) -> Interval:
    """Preimage of U under f restricted to lap ``idx``.

    With ``clip`` the part of U outside the lap image is discarded; otherwise
    it must be covered, and BranchBlocked is raised when it is not.
    """
    img = fmap.lap_image(idx)
    tol = tau_geom(fmap)
    if clip:
        cut = U.intersect(img)
        if cut is None:
            raise BranchBlocked(f"{U} misses the image of lap {idx}")
        U = cut
    elif not img.contains_interval(U, tol):
        raise BranchBlocked(f"{U} is not covered by lap {idx} (image {img})")
    lo = fmap.solve_on_lap(idx, min(max(U.lo, img.lo), img.hi))
    hi = fmap.solve_on_lap(idx, min(max(U.hi, img.lo), img.hi))
    return Interval.sorted(lo, hi)


def pullback_monotone(fmap: AnalyticMap, U: Interval, companion: Interval) -> Interval:
    """Interval U~ containing ``companion`` with f monotone on U~ and f(U~) = U."""
    tol = tau_geom(fmap)
    idx = lap_of_interval(fmap, companion, tol)
    if not U.contains_interval(fmap.image(companion), tol):
        raise BranchBlocked("U does not contain the image of the companion interval")
    return monotone_preimage(fmap, idx, U)


def pullback_along(fmap: AnalyticMap, U: Interval, chain: Sequence[Interval]) -> list[Interval]:
    """Pull U back along a real chain J_0, ..., J_m with f(J_i) inside J_{i+1}.

    ``U`` must contain J_m; returns [U_0, ..., U_m] with U_m = U and
    f(U_i) = U_{i+1}, f monotone on each U_i (i < m).
    """
    out = [U]
    for J in reversed(chain[:-1]):
        out.append(pullback_monotone(fmap, out[-1], J))
    return out[::-1]


def symmetrize(fmap: AnalyticMap, J: Interval, c: CriticalPoint) -> Interval:
    """Smallest interval symmetric about ``c`` (equal images of both halves)
    containing J and with the same image as hull(J, c)."""
    tol = tau_geom(fmap)
    H = Interval(min(J.lo, c.position), max(J.hi, c.position)) if not J.contains(c.position) else J
    others = [q for q in critical_points_in(fmap, H, tol) if q.index != c.index]
    if others:
        raise NotLocallyUnimodal(f"{H} also contains the critical point {others[0].position:.17g}")
    fc = fmap.evaluate(c.position)
    ends = [fmap.evaluate(H.lo), fmap.evaluate(H.hi)]
    v = max(ends, key=lambda y: abs(y - fc))
    try:
        lo = fmap.solve_on_lap(c.index, v)
        hi = fmap.solve_on_lap(c.index + 1, v)
    except BranchAmbiguity as exc:
        raise NotLocallyUnimodal(str(exc)) from exc
    return Interval(min(lo, H.lo), max(hi, H.hi))


def maximal_monotone_interval(fmap: AnalyticMap, x: float, n: int) -> Interval:
    """Maximal interval around x on which f^n is monotone."""
    if n == 0:
        return fmap.interval
    pts = fmap.orbit(x, n - 1)
    for i, y in enumerate(pts):
        for c in fmap.positions:
            if abs(y - c) < TAU_ROOT * max(1.0, fmap.scale):
                raise CriticalOrbit(f"f^{i}(x) hits the critical point {c:.17g}")
    M = fmap.interval
    for y in reversed(pts):
        M = monotone_preimage(fmap, fmap.lap_index(y), M, clip=True)
    return M


def star_k(family: Sequence[Interval], J: Interval, tol: float = 0.0) -> bool:
    """True iff at most one member of ``family`` lies in the interior of J."""
    return sum(1 for A in family if J.strictly_contains(A, -tol)) <= 1


# ---------------------------------------------------------------------- nice sets
@dataclass(frozen=True)
class NiceSet:
    components: tuple[Interval, ...]

    def __post_init__(self):
        comps = tuple(sorted(self.components, key=lambda J: J.lo))
        object.__setattr__(self, "components", comps)
        for A, B in zip(comps, comps[1:]):
            if A.hi > B.lo:
                raise ValueError("nice-set components must be disjoint")

    def component_of(self, x: float) -> int | None:
        for j, J in enumerate(self.components):
            if J.contains_interior(x):
                return j
        return None

    def interior_index(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized component index of each point (-1 outside int W)."""
        out = np.full(np.shape(xs), -1, dtype=int)
        for j, J in enumerate(self.components):
            out[(xs > J.lo) & (xs < J.hi)] = j
        return out

    def contains_interior(self, x: float) -> bool:
        return self.component_of(x) is not None


def nice_set_violations(fmap: AnalyticMap, W: NiceSet, horizon: int, tol: float | None = None) -> list[tuple]:
    """Boundary orbits re-entering int W: list of (point, time, component)."""
    tol = tau_geom(fmap) if tol is None else tol
    bad = []
    for J in W.components:
        for x in J.endpoints:
            y = x
            for t in range(1, horizon + 1):
                y = fmap.evaluate(y)
                for j, K in enumerate(W.components):
                    if K.contains_interior(y, tol):
                        bad.append((x, t, j))
                        break
                else:
                    continue
                break
    return bad


def is_nice(fmap: AnalyticMap, W: NiceSet, horizon: int) -> bool:
    one_crit = all(len(critical_points_in(fmap, J)) == 1 for J in W.components)
    return one_crit and not nice_set_violations(fmap, W, horizon)


@dataclass(frozen=True)
class EntryDomain:
    interval: Interval
    time: int
    target: int
    orbit: tuple[Interval, ...] = field(default=(), repr=False)


class _NoEntry:
    """Returned by first_entry when the orbit stays outside W up to the horizon."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NoEntry"

    def __bool__(self):
        return False


NoEntry = _NoEntry()


def entry_time(fmap: AnalyticMap, W: NiceSet, x: float, horizon: int) -> tuple[int, int] | None:
    y = x
    for n in range(1, horizon + 1):
        y = fmap.evaluate(y)
        j = W.component_of(y)
        if j is not None:
            return n, j
    return None


def first_entry(fmap: AnalyticMap, W: NiceSet, x: float, horizon: int):
    """First-entry time of x into int W and its entry domain.

    The domain is the maximal interval around x with the same entry time and
    target component, obtained by pulling the target component back along
    the orbit of x and removing int W at every intermediate step.
    """
    if W.contains_interior(x):
        raise ValueError(f"x={x!r} lies in the interior of W")
    hit = entry_time(fmap, W, x, horizon)
    if hit is None:
        return NoEntry
    n, j = hit
    pts = fmap.orbit(x, n - 1)
    J = W.components[j]
    chain = [J]
    for y in reversed(pts):
        J = monotone_preimage(fmap, fmap.lap_index(y), J, clip=True)
        J = _component_avoiding(J, y, W)
        chain.append(J)
    return EntryDomain(J, n, j, tuple(chain[::-1]))


def _component_avoiding(J: Interval, y: float, W: NiceSet) -> Interval:
    lo, hi = J.lo, J.hi
    for K in W.components:
        if K.hi <= y and K.hi > lo:
            lo = K.hi
        if K.lo >= y and K.lo < hi:
            hi = K.lo
    return Interval(lo, hi)


def entry_times_array(fmap: AnalyticMap, W: NiceSet, xs: np.ndarray, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized brute-force entry times (0 where none) and targets."""
    xs = np.asarray(xs, dtype=float)
    times = np.zeros(xs.shape, dtype=int)
    target = np.full(xs.shape, -1, dtype=int)
    y = xs.copy()
    alive = np.ones(xs.shape, dtype=bool)
    for n in range(1, horizon + 1):
        y = fmap.evaluate(y)
        idx = W.interior_index(y)
        hit = alive & (idx >= 0)
        times[hit] = n
        target[hit] = idx[hit]
        alive &= ~hit
        if not alive.any():
            break
    return times, target


def entry_domain_by_scan(fmap: AnalyticMap, W: NiceSet, xs: np.ndarray, horizon: int, iters: int = 80):
    """Brute-force entry domains: outward geometric stepping from each seed
    until the (time, target) label changes, then bisection on the label."""
    xs = np.asarray(xs, dtype=float)
    t0, j0 = entry_times_array(fmap, W, xs, horizon)
    lo_b, hi_b = fmap.interval.lo, fmap.interval.hi
    ends = []
    for direction in (-1.0, 1.0):
        inside = xs.copy()
        step = np.full(xs.shape, 1e-13 * fmap.scale)
        outside = np.full(xs.shape, np.nan)
        active = t0 > 0
        for _ in range(400):
            if not active.any():
                break
            trial = np.clip(inside + direction * step, lo_b, hi_b)
            t, j = entry_times_array(fmap, W, trial, horizon)
            same = (t == t0) & (j == j0)
            at_edge = trial == (lo_b if direction < 0 else hi_b)
            grow = active & same & ~at_edge
            inside = np.where(grow, trial, inside)
            stop_out = active & ~same
            outside = np.where(stop_out, trial, outside)
            stop_edge = active & same & at_edge
            inside = np.where(stop_edge, trial, inside)
            outside = np.where(stop_edge, trial, outside)
            active &= ~(stop_out | stop_edge)
            step = step * 1.1
        a, b = inside.copy(), outside.copy()
        for _ in range(iters):
            m = 0.5 * (a + b)
            t, j = entry_times_array(fmap, W, m, horizon)
            same = (t == t0) & (j == j0)
            a = np.where(same, m, a)
            b = np.where(same, b, m)
        ends.append(0.5 * (a + b))
    return ends[0], ends[1], t0, j0
