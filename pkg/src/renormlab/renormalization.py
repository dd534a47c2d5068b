"""Restrictive intervals, the renormalization tower and the per-level cycle
structure (involved critical points, successors, symmetrized intervals,
first-entry chains, the family A^k and the nice set N^k)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    NiceSet,
    interval_orbit,
    is_nice,
    pullback_monotone,
    star_k,
    symmetrize,
    tau_geom,
)
from .errors import BranchAmbiguity, BranchBlocked, ChainBroken, NotLocallyUnimodal, PrecisionExhausted
from .intervals import Interval, max_overlap
from .maps import AnalyticMap, CriticalPoint

GRID_POINTS = 2048
EPS = np.finfo(float).eps


class _NotRenormalizable:
    """Sentinel returned when no restrictive interval is found."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NotRenormalizable"

    def __bool__(self):
        return False


NotRenormalizable = _NotRenormalizable()


@dataclass
class RenormLevel:
    """One level of the tower, with its cycle data."""

    k: int
    period: int
    P: Interval  # a = periodic boundary point, b = its symmetric partner
    p: CriticalPoint
    fmap: AnalyticMap = field(repr=False)
    orbit: tuple[Interval, ...] = field(default=(), repr=False)
    involved: tuple[CriticalPoint, ...] = ()
    position: dict = field(default_factory=dict)
    successor: dict = field(default_factory=dict)
    transit: dict = field(default_factory=dict)
    Q0: dict = field(default_factory=dict)
    chains: dict = field(default_factory=dict)
    family: tuple[Interval, ...] = field(default=(), repr=False)
    nice: NiceSet | None = field(default=None, repr=False)
    boundary_orbit: tuple[float, ...] = field(default=(), repr=False)
    issues: list = field(default_factory=list, repr=False)

    @property
    def boundary_point(self) -> float:
        return self.P.a

    @property
    def partner(self) -> float:
        return self.P.b

    def predecessor(self, r: int) -> int:
        for q, s in self.successor.items():
            if s == r:
                return q
        raise KeyError(r)

    def critical(self, index: int) -> CriticalPoint:
        return self.fmap.critical_points[index]

    def cycle_order(self) -> list[int]:
        return sorted(self.position, key=lambda q: self.position[q])

    def chain_for_fold(self, q: int) -> list[Interval]:
        """Intervals visited from Q0(q) to the successor, as f^i(Q0(q)), 0 <= i <= n."""
        n = self.transit[self.successor[q]]
        return interval_orbit(self.fmap, self.Q0[q], n)


# ---------------------------------------------------------------------- detection
def fixed_points(fmap: AnalyticMap, n: int, J: Interval, grid: int = GRID_POINTS) -> list[float]:
    """Fixed points of f^n in J located by sign changes on a grid, refined by brentq."""
    xs = np.linspace(J.lo, J.hi, grid)
    g = fmap.iterate(xs, n) - xs
    out = [float(x) for x, v in zip(xs, g) if v == 0.0]
    sign = np.sign(g)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    h = lambda x: fmap.iterate(x, n) - x
    for i in idx:
        out.append(brentq(h, xs[i], xs[i + 1], xtol=1e-16 * fmap.scale, rtol=1e-15))
    return sorted(out)


def _partner(fmap: AnalyticMap, p: CriticalPoint, u: float) -> float | None:
    other = p.index + 1 if u < p.position else p.index
    try:
        return fmap.solve_on_lap(other, fmap.evaluate(u))
    except BranchAmbiguity:
        return None


def restrictive_interval_valid(fmap: AnalyticMap, p: CriticalPoint, P: Interval, n: int):
    """Check the restrictive-interval properties; return the orbit or None."""
    tol = tau_geom(fmap)
    inside = [c for c in fmap.critical_points if P.contains_interior(c.position, -tol)]
    if [c.index for c in inside] != [p.index] or not P.contains_interior(p.position, tol):
        return None
    orbit = interval_orbit(fmap, P, n)
    if not P.contains_interval(orbit[n], tol):
        return None
    fu = fmap.iterate(P.a, n)
    if min(abs(fu - P.a), abs(fu - P.b)) > 1e3 * tol:
        return None
    if max_overlap(list(orbit[:n])) >= tol:
        return None
    return orbit[:n]


def detect_renormalization(
    fmap: AnalyticMap,
    p: CriticalPoint,
    max_period: int,
    parent: RenormLevel | None = None,
    max_ratio: int | None = None,
):
    """Smallest-period restrictive interval around p (inside the parent's
    interval when given); NotRenormalizable when none exists."""
    if parent is None:
        search = Interval(fmap.laps[p.index].lo, fmap.laps[p.index + 1].hi)
        periods = range(2, max_period + 1)
    else:
        search = parent.P
        top = max_ratio if max_ratio is not None else max_period
        periods = [m * parent.period for m in range(2, top + 1)]
    tol = tau_geom(fmap)
    for n in periods:
        best = None
        for u in fixed_points(fmap, n, search):
            if abs(u - p.position) < 1e3 * tol:
                continue
            v = _partner(fmap, p, u)
            if v is None or abs(v - u) < 1e3 * tol:
                continue
            P = Interval(u, v)
            if parent is not None and not parent.P.contains_interval(P, tol):
                continue
            orbit = restrictive_interval_valid(fmap, p, P, n)
            if orbit is not None and (best is None or P.length > best[0].length):
                best = (P, orbit)
        if best is not None:
            k = 1 if parent is None else parent.k + 1
            return build_level(fmap, p, k, n, best[0], best[1])
    return NotRenormalizable


def build_tower(
    fmap: AnalyticMap,
    p: CriticalPoint | int = 0,
    depth: int = 6,
    max_period: int = 16,
    max_ratio: int = 4,
    strict: bool = False,
) -> list[RenormLevel]:
    """Levels 1..depth (fewer if the map stops being renormalizable).

    Raises PrecisionExhausted under ``strict`` when the intervals become too
    small to resolve before ``depth`` is reached.
    """
    if isinstance(p, int):
        p = fmap.critical_points[p]
    levels: list[RenormLevel] = []
    floor = 1e3 * EPS * fmap.scale
    while len(levels) < depth:
        parent = levels[-1] if levels else None
        if parent is not None and parent.P.length < floor:
            if strict:
                raise PrecisionExhausted(f"|P^{parent.k}| below resolution", levels)
            break
        level = detect_renormalization(fmap, p, max_period, parent, max_ratio)
        if level is NotRenormalizable:
            break
        levels.append(level)
    return levels


# ---------------------------------------------------------------------- cycle data
def build_level(fmap: AnalyticMap, p: CriticalPoint, k: int, n: int, P: Interval, orbit) -> RenormLevel:
    level = RenormLevel(k=k, period=n, P=P, p=p, fmap=fmap, orbit=tuple(orbit))
    level.boundary_orbit = tuple(fmap.orbit(P.a, n))
    tol = tau_geom(fmap)
    hits = []
    for j, J in enumerate(orbit):
        for c in fmap.critical_points:
            if J.contains_interior(c.position, -tol):
                hits.append((j, c))
    seen = {}
    for j, c in hits:
        seen.setdefault(c.index, j)
    level.involved = tuple(fmap.critical_points[i] for i in sorted(seen, key=lambda i: seen[i]))
    level.position = dict(seen)
    order = level.cycle_order()
    for a, b in zip(order, order[1:] + order[:1]):
        level.successor[a] = b
        gap = (seen[b] - seen[a]) % n
        level.transit[b] = gap if gap else n
    for q in order:
        J = orbit[seen[q]]
        try:
            level.Q0[q] = symmetrize(fmap, J, fmap.critical_points[q])
        except NotLocallyUnimodal as exc:
            level.issues.append(f"Q0 for critical point {q}: {exc}")
    if len(level.Q0) == len(order):
        _build_family_and_chains(level)
    return level


def _build_family_and_chains(level: RenormLevel) -> None:
    fmap = level.fmap
    fam = []
    for q in level.cycle_order():
        n = level.transit[level.successor[q]]
        fam.extend(interval_orbit(fmap, level.Q0[q], n)[1:])
    level.family = tuple(fam)
    level.nice = _nice_set(level)
    for r in level.cycle_order():
        q = level.predecessor(r)
        n = level.transit[r]
        forward = interval_orbit(fmap, level.Q0[q], n)
        chain = [level.Q0[r]]
        try:
            for i in range(1, n):
                chain.append(pullback_monotone(fmap, chain[-1], forward[n - i]))
        except BranchBlocked as exc:
            level.issues.append(f"chain for critical point {r} broken at step {len(chain)}: {exc}")
            continue
        level.chains[r] = chain


def _nice_set(level: RenormLevel) -> NiceSet | None:
    fmap = level.fmap
    tol = 1e-9 * fmap.scale
    comps = []
    for c in fmap.critical_points:
        if c.index in level.Q0:
            comps.append(level.Q0[c.index])
            continue
        fc = fmap.evaluate(c.position)
        for q in level.involved:
            if abs(fc - fmap.evaluate(q.position)) < tol:
                img = fmap.image(level.Q0[q.index])
                far = img.hi if abs(img.lo - fc) < abs(img.hi - fc) else img.lo
                try:
                    comps.append(Interval(fmap.solve_on_lap(c.index, far), fmap.solve_on_lap(c.index + 1, far)))
                except BranchAmbiguity:
                    pass
                break
    try:
        return NiceSet(tuple(comps))
    except ValueError:
        level.issues.append("nice-set components overlap")
        return None


def cycle_intervals(level: RenormLevel) -> tuple[dict, tuple[Interval, ...]]:
    """First-entry chains R_{-i} per involved critical point and the family A^k."""
    missing = [q for q in level.position if q not in level.chains]
    if missing:
        raise ChainBroken(f"no chain for critical points {missing}: {level.issues}")
    return level.chains, level.family


def involved_set_and_successors(level: RenormLevel) -> list[tuple[int, int, int]]:
    """Cyclic order as (q, successor, transit time to the successor)."""
    return [(q, level.successor[q], level.transit[level.successor[q]]) for q in level.cycle_order()]


# ---------------------------------------------------------------------- standard conditions
@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


def verify_standard_conditions(level: RenormLevel, horizon: int | None = None) -> list[ConditionResult]:
    fmap = level.fmap
    tol = tau_geom(fmap)
    out = []

    involved_vals = [fmap.evaluate(q.position) for q in level.involved]
    worst = 0.0
    for c in fmap.critical_points:
        fc = fmap.evaluate(c.position)
        worst = max(worst, min(abs(fc - v) for v in involved_vals))
    out.append(ConditionResult("critical_values_shared", worst <= 1e-9 * fmap.scale, worst / fmap.scale))

    sym = 0.0
    for q, Q in level.Q0.items():
        sym = max(sym, abs(fmap.evaluate(Q.lo) - fmap.evaluate(Q.hi)) / Q.length)
    complete = len(level.Q0) == len(level.position)
    out.append(ConditionResult("Q0_symmetric", complete and sym <= 1e-8, sym))

    counts = [
        sum(1 for c in fmap.critical_points if Q.contains_interior(c.position, -tol)) for Q in level.Q0.values()
    ]
    ok = complete and all(cnt == 1 for cnt in counts)
    out.append(ConditionResult("one_critical_point_per_Q0", ok, float(max(counts, default=0))))

    orbit_pts = np.array(level.boundary_orbit)
    dev = 0.0
    for Q in level.Q0.values():
        d = min(np.min(np.abs(orbit_pts - e)) for e in Q.endpoints)
        dev = max(dev, d / Q.length)
    periodic = abs(level.boundary_orbit[-1] - level.boundary_orbit[0]) <= 1e3 * tol
    out.append(ConditionResult("periodic_boundary_orbit", complete and periodic and dev <= 1e-7, dev))

    margin, ok = np.inf, complete
    for q in level.position:
        if not complete:
            break
        r = level.successor[q]
        img = interval_orbit(fmap, level.Q0[q], level.transit[r])[-1]
        R0 = level.Q0[r]
        inner = min(img.lo - R0.lo, R0.hi - img.hi) / R0.length
        margin = min(margin, inner)
        ok &= inner >= -1e-9 and img.contains(fmap.critical_points[r].position)
    out.append(ConditionResult("returns_into_successor", bool(ok), float(margin) if complete else float("nan")))

    fam = []
    for q in level.position:
        if q in level.Q0:
            fam.extend(interval_orbit(fmap, level.Q0[q], level.transit[level.successor[q]])[:-1])
    ov = max_overlap(fam) if fam else float("inf")
    out.append(ConditionResult("disjoint_cycle_family", complete and ov < tol, ov / fmap.scale))
    if horizon is not None and level.nice is not None:
        out.append(ConditionResult("nice_set", is_nice(fmap, level.nice, horizon), 0.0))
    return out


def first_standard_level(tower: list[RenormLevel]) -> int | None:
    """k0: the first level at which every standard condition holds."""
    for level in tower:
        if all(r.passed for r in verify_standard_conditions(level)):
            return level.k
    return None


def star_k_for(level: RenormLevel, J: Interval) -> bool:
    return star_k(level.family, J, tau_geom(level.fmap))


# ---------------------------------------------------------------------- serialization
def _fmt(x: float) -> str:
    return f"{x:.17g}"


def level_record(level: RenormLevel) -> dict:
    """Stable serialization of a level (decimal strings at 17 significant digits)."""
    return {
        "k": level.k,
        "period": level.period,
        "P": [_fmt(level.P.a), _fmt(level.P.b)],
        "critical_point": level.p.index,
        "involved": [q.index for q in level.involved],
        "successor": {str(q): level.successor[q] for q in level.cycle_order()},
        "transit": {str(q): level.transit[q] for q in level.cycle_order()},
        "Q0": {str(q): [_fmt(Q.lo), _fmt(Q.hi)] for q, Q in sorted(level.Q0.items())},
        "orbit": [[_fmt(J.lo), _fmt(J.hi)] for J in level.orbit],
    }


def level_from_record(fmap: AnalyticMap, rec: dict) -> RenormLevel:
    P = Interval(float(rec["P"][0]), float(rec["P"][1]))
    p = fmap.critical_points[rec["critical_point"]]
    orbit = [Interval(float(a), float(b)) for a, b in rec["orbit"]]
    return build_level(fmap, p, rec["k"], rec["period"], P, orbit)
