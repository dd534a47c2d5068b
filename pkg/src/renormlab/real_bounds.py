"""Measured real bounds for the levels of a renormalization tower.

Every quantity here is an empirical constant: derivative bounds of the
monotone and folding parts, scaling ratios, the Schwarzian of the return
branches, the S/L/T interval hierarchy with its margins, and the
commensurability statistics of the cycle intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import interval_orbit, maximal_monotone_interval, pullback_monotone, star_k, tau_geom
from .errors import BranchAmbiguity, BranchBlocked, ChartDegenerate, PullbackObstructed
from .intervals import AffineChart, Interval, cut_ratio, deep_margin, side_margins
from .maps import AnalyticMap, schwarzian_from_jet
from .renormalization import RenormLevel

EPS = np.finfo(float).eps
GRID = 4096
SCHWARZ_GRID = 1024


# ---------------------------------------------------------------------- charts
def periodic_endpoint(level: RenormLevel, J: Interval) -> float:
    """The endpoint of a cycle interval lying on the boundary periodic orbit."""
    pts = np.asarray(level.boundary_orbit)
    d_lo = np.min(np.abs(pts - J.lo))
    d_hi = np.min(np.abs(pts - J.hi))
    return J.lo if d_lo <= d_hi else J.hi


def chart(level: RenormLevel, J: Interval) -> AffineChart:
    if J.length < 100 * EPS * max(1.0, abs(J.mid)):
        raise ChartDegenerate(f"interval {J} too short for an affine chart")
    return AffineChart(J, periodic_endpoint(level, J))


def unit_grid(n: int, offset: bool = False) -> np.ndarray:
    if offset:
        h = 2.0 / n
        return np.linspace(-1.0 + 0.5 * h, 1.0 - 0.5 * h, n)
    return np.linspace(-1.0, 1.0, n)


# ---------------------------------------------------------------------- monotone / folding parts
def monotone_part_derivative(level: RenormLevel, q: int, xs: np.ndarray, steps: int | None = None) -> np.ndarray:
    """D(A_{Q0} o f^m o A^{-1}_{Q_{-m}}) on chart coordinates xs (m = n^q - 1 by default)."""
    chain = level.chains[q]
    m = len(chain) - 1 if steps is None else steps
    src, dst = chart(level, chain[m]), chart(level, chain[0])
    x = src.inverse(xs)
    _, d = level.fmap.orbit_derivative(x, m)
    return d * dst.slope / src.slope


def monotone_part_stats(level: RenormLevel, q: int, grid: int = GRID, partial: bool = False) -> tuple[float, float]:
    """(min |D phi|, max |D phi|); with ``partial`` the extremes over all partial parts."""
    xs = unit_grid(grid)
    steps = range(1, len(level.chains[q])) if partial else [None]
    lo, hi = np.inf, 0.0
    for m in steps:
        d = np.abs(monotone_part_derivative(level, q, xs, m))
        lo, hi = min(lo, float(d.min())), max(hi, float(d.max()))
    if not np.isfinite(lo):
        return 1.0, 1.0
    return lo, hi


def folding_part_derivative(level: RenormLevel, q: int, xs: np.ndarray):
    """(D psi(xs), chart position of q) for psi = A_{R_{-(n-1)}} o f o A^{-1}_{Q0}."""
    r = level.successor[q]
    src = chart(level, level.Q0[q])
    dst = chart(level, level.chains[r][-1])
    d = level.fmap.derivative(src.inverse(xs))
    return d * dst.slope / src.slope, float(src(level.critical(q).position))


def fold_constant(dpsi: np.ndarray, xs: np.ndarray, c: float, ell: int, exclude: float = 1e-6) -> float:
    """Smallest K with |Dpsi(x)| <= K |x - c|^(ell-1) on the sample."""
    keep = np.abs(xs - c) >= exclude
    return float(np.max(np.abs(dpsi[keep]) / np.abs(xs[keep] - c) ** (ell - 1)))


def folding_part_constant(level: RenormLevel, q: int, grid: int = GRID, offset: bool = False) -> float:
    xs = unit_grid(grid, offset)
    d, c = folding_part_derivative(level, q, xs)
    return fold_constant(d, xs, c, level.critical(q).criticality)


def scaling_ratio(level: RenormLevel, deeper: RenormLevel, q: int) -> float:
    return deeper.Q0[q].length / level.Q0[q].length


# ---------------------------------------------------------------------- Schwarzian
def schwarzian_of_iterate(fmap: AnalyticMap, x: np.ndarray, n: int) -> np.ndarray:
    """S(f^n)(x) = sum_t Sf(f^t x) |Df^t(x)|^2."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    dt = np.ones_like(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(n):
            _, d1, d2, d3 = fmap.jet(x)
            s = np.where(np.abs(d1) < 1e-300, -np.inf, schwarzian_from_jet(d1, d2, d3))
            total = total + s * dt**2
            dt = dt * d1
            x = fmap.evaluate(x)
    return total


def schwarzian_negativity(level: RenormLevel, q: int, grid: int = SCHWARZ_GRID) -> float:
    """max of S f^{n^q} over a grid of Q_{-(n^q - 1)}."""
    chain = level.chains[q]
    J = chain[-1]
    xs = J.lo + (np.arange(grid) + 0.5) / grid * J.length
    return float(np.max(schwarzian_of_iterate(level.fmap, xs, len(chain))))


# ---------------------------------------------------------------------- hierarchy
def maximal_star_interval(level: RenormLevel, q: int) -> Interval:
    """M^k_q: the maximal interval containing Q0 with property *_k."""
    Q0 = level.Q0[q]
    I = level.fmap.interval
    fam = level.family
    tol = tau_geom(level.fmap)

    def ok(lo, hi):
        return star_k(fam, Interval(lo, hi), tol)

    def grow(lo_fixed, hi_fixed, side, lim):
        # largest extension on one side keeping *_k
        a, b = 0.0, 1.0
        if ok(*((lim, hi_fixed) if side < 0 else (lo_fixed, lim))):
            return lim
        for _ in range(80):
            m = 0.5 * (a + b)
            x = (lo_fixed + m * (lim - lo_fixed)) if side < 0 else (hi_fixed + m * (lim - hi_fixed))
            if ok(*((x, hi_fixed) if side < 0 else (lo_fixed, x))):
                a = m
            else:
                b = m
        return (lo_fixed + a * (lim - lo_fixed)) if side < 0 else (hi_fixed + a * (lim - hi_fixed))

    # symmetric growth first, then each side independently
    a, b = 0.0, max(Q0.lo - I.lo, I.hi - Q0.hi) / Q0.length
    sym = lambda d: (max(I.lo, Q0.lo - d * Q0.length), min(I.hi, Q0.hi + d * Q0.length))
    if not ok(*sym(b)):
        for _ in range(80):
            m = 0.5 * (a + b)
            if ok(*sym(m)):
                a = m
            else:
                b = m
        lo, hi = sym(a)
    else:
        lo, hi = sym(b)
    lo = grow(lo, hi, -1, I.lo)
    hi = grow(lo, hi, +1, I.hi)
    return Interval(lo, hi)


def _far_end(V: Interval, anchor: float, toward: float) -> float:
    """Endpoint of V on the same side of ``anchor`` as ``toward``."""
    return V.hi if toward > anchor else V.lo


def _symmetric_preimage(fmap: AnalyticMap, r: int, value: float) -> Interval:
    try:
        return Interval(fmap.solve_on_lap(r, value), fmap.solve_on_lap(r + 1, value))
    except BranchAmbiguity as exc:
        raise PullbackObstructed(f"value {value:.17g} not reached symmetrically about critical point {r}") from exc


@dataclass
class CyclePullback:
    U: dict
    V: dict
    result: Interval


def pullback_along_cycle(level: RenormLevel, q: int, U: Interval) -> CyclePullback:
    """Pull U (containing Q0(q)) once around the k-cycle back to a symmetric
    interval about q, through the monotone chains and the folds."""
    fmap = level.fmap
    if not U.contains_interval(level.Q0[q], tau_geom(fmap)):
        raise PullbackObstructed("U must contain Q0")
    Us, Vs = {q: U}, {}
    r, cur = q, U
    for _ in range(len(level.position)):
        chain = level.chains[r]
        try:
            V = cur
            for i in range(1, len(chain)):
                V = pullback_monotone(fmap, V, chain[i])
        except BranchBlocked as exc:
            raise PullbackObstructed(f"monotone chain of critical point {r}: {exc}") from exc
        Vs[r] = V
        prev = level.predecessor(r)
        Qp = level.Q0[prev]
        crit_val = fmap.evaluate(level.critical(prev).position)
        edge_val = fmap.evaluate(Qp.lo)
        cur = _symmetric_preimage(fmap, prev, _far_end(V, crit_val, edge_val))
        if prev == q:
            return CyclePullback(Us, Vs, cur)
        Us[prev] = cur
        r = prev
    raise PullbackObstructed("cycle did not close")


def return_branch_interval(level: RenormLevel, q: int) -> Interval:
    """L^k_q: maximal interval around Q0 with no critical point of f^{N_k} outside Q0."""
    Q0 = level.Q0[q]
    left = maximal_monotone_interval(level.fmap, Q0.lo, level.period)
    right = maximal_monotone_interval(level.fmap, Q0.hi, level.period)
    return Interval(left.lo, right.hi)


@dataclass
class Hierarchy:
    M: Interval
    T: Interval
    S: Interval
    L: Interval
    parent: Interval
    q0_in_s: tuple[float, float]
    l_in_t: tuple[float, float]
    s_in_l: float
    t_in_parent: float
    s_in_m: float

    @property
    def margins(self) -> tuple[float, float, float, float]:
        return (*self.q0_in_s, *self.l_in_t)

    @property
    def nested(self) -> bool:
        return min(self.margins) > 0 and self.s_in_l >= -1e-9 and self.t_in_parent >= -1e-9


def interval_hierarchy(level: RenormLevel, parent: RenormLevel, q: int) -> Hierarchy:
    """M, T, S, L around Q0(q) with their nesting margins."""
    if parent is None or q not in parent.Q0:
        raise PullbackObstructed("the hierarchy needs the parent level's Q0")
    Q0, Qp = level.Q0[q], parent.Q0[q]
    M = maximal_star_interval(level, q)
    T = M.intersect(Qp)
    if T is None:
        raise PullbackObstructed("M and the parent interval are disjoint")
    S = pullback_along_cycle(level, q, T).result
    L = return_branch_interval(level, q)
    return Hierarchy(
        M=M,
        T=T,
        S=S,
        L=L,
        parent=Qp,
        q0_in_s=side_margins(Q0, S),
        l_in_t=side_margins(L, T),
        s_in_l=min(S.lo - L.lo, L.hi - S.hi) / Q0.length,
        t_in_parent=min(T.lo - Qp.lo, Qp.hi - T.hi) / Q0.length,
        s_in_m=min(S.lo - M.lo, M.hi - S.hi) / Q0.length,
    )


def boundary_branch_margin(level: RenormLevel, q: int) -> float:
    """delta with J inside_delta f^{N}(J), J the monotone branch of f^N at the periodic endpoint."""
    u = periodic_endpoint(level, level.Q0[q])
    J = maximal_monotone_interval(level.fmap, u, level.period)
    return deep_margin(J, interval_orbit(level.fmap, J, level.period)[-1])


# ---------------------------------------------------------------------- commensurability
def postcritical_orbit(fmap: AnalyticMap, n_points: int = 100_000, transient: int = 0) -> np.ndarray:
    """Forward orbits of the critical values (n_points in total)."""
    crits = fmap.positions
    per = max(1, n_points // len(crits))
    out = np.empty((len(crits), per))
    x = np.array([fmap.evaluate(c) for c in crits])
    for _ in range(transient):
        x = fmap.evaluate(x)
    for i in range(per):
        out[:, i] = x
        x = fmap.evaluate(x)
    return out.ravel()


def postcritical_gap(level: RenormLevel, q: int, orbit: np.ndarray) -> float:
    """Largest delta with P(f) inside delta-Q0 equal to P(f) inside Q0."""
    Q0 = level.Q0[q]
    outside = orbit[(orbit < Q0.lo) | (orbit > Q0.hi)]
    if outside.size == 0:
        return float("inf")
    return float(np.min(Q0.distance(outside)) / Q0.length)


def cycle_length_sum(level: RenormLevel) -> float:
    return float(sum(J.length for chain in level.chains.values() for J in chain))


def critical_preimage_cut(level: RenormLevel, q: int) -> float:
    """min over 0 < i < n of the cut ratio of f^i(Q0(q)) by its preimage of the successor."""
    fmap = level.fmap
    r = level.successor[q]
    n = level.transit[r]
    forward = interval_orbit(fmap, level.Q0[q], n)
    b = level.critical(r).position
    worst = 1.0
    for i in range(n - 1, 0, -1):
        J = forward[i]
        b = fmap.solve_on_lap(fmap.lap_index(J.mid), b)
        worst = min(worst, cut_ratio(J, b))
    return worst


def orbit_cut(level: RenormLevel, q: int) -> float:
    """min over i of the cut ratio of R_{-(n-i)} by f^i(q), r the successor of q."""
    fmap = level.fmap
    r = level.successor[q]
    chain = level.chains[r]
    n = len(chain)
    x = level.critical(q).position
    worst = 1.0
    for i in range(1, n + 1):
        x = fmap.evaluate(x)
        worst = min(worst, cut_ratio(chain[n - i], x))
    return worst


def chain_intervals(level: RenormLevel) -> list[Interval]:
    return [J for r in level.cycle_order() for J in level.chains[r]]


def boundary_gap_ratio(level: RenormLevel, parent: RenormLevel) -> tuple[float, float]:
    """Bounded-geometry gaps: (distance to the enclosing parent interval's boundary,
    space between sibling intervals), both in units of the interval lengths."""
    outer = chain_intervals(parent)
    inner = chain_intervals(level)
    to_boundary, between = np.inf, np.inf
    tol = tau_geom(level.fmap)
    for C in outer:
        kids = [J for J in inner if C.contains_interval(J, tol)]
        for J in kids:
            to_boundary = min(to_boundary, min(J.lo - C.lo, C.hi - J.hi) / J.length)
        kids.sort(key=lambda J: J.lo)
        for A, B in zip(kids, kids[1:]):
            gap = B.lo - A.hi
            if gap > tol:
                between = min(between, gap / min(A.length, B.length))
    return float(to_boundary), float(between)


def entry_commensurability(level: RenormLevel, coarse: RenormLevel, ratio_cap: int = 2) -> float:
    """max (|R^j_0| / |Q^k_{-l}|) / (|Q^j_0| / |Q^k_0|) over Q^k_{-l} inside R^j_0, l < cap N_j."""
    worst = 0.0
    tol = tau_geom(level.fmap)
    for q in level.cycle_order():
        Qk = level.Q0[q]
        for ell, J in enumerate(level.chains[q]):
            if ell >= ratio_cap * coarse.period:
                break
            for r, R in coarse.Q0.items():
                if R.contains_interval(J, tol) and q in coarse.Q0:
                    val = (R.length / J.length) / (coarse.Q0[q].length / Qk.length)
                    worst = max(worst, val)
    return worst


def return_commensurability(level: RenormLevel, parent: RenormLevel) -> float:
    """min |f^i(Q0^k)| / |R0^{k-1}| over returns f^i(Q0^k) inside some R0^{k-1}."""
    worst = np.inf
    tol = tau_geom(level.fmap)
    for q in level.cycle_order():
        n = level.transit[level.successor[q]]
        for J in interval_orbit(level.fmap, level.Q0[q], n)[1:]:
            for R in parent.Q0.values():
                if R.contains_interval(J, tol):
                    worst = min(worst, J.length / R.length)
    return float(worst)


# ---------------------------------------------------------------------- attractor diagnostic
def attracting_cycle(fmap: AnalyticMap, q: int = 0, max_period: int = 64, transient: int = 20000):
    """(period, multiplier) of an attracting cycle catching the critical orbit, or None."""
    x = fmap.evaluate(fmap.positions[q])
    for _ in range(transient):
        x = fmap.evaluate(x)
    orbit = fmap.orbit(x, max_period)
    for n in range(1, max_period + 1):
        if abs(orbit[n] - orbit[0]) < 1e-10 * fmap.scale:
            _, mult = fmap.orbit_derivative(orbit[0], n)
            if abs(mult) < 1.0:
                return n, float(mult)
            return None
    return None


# ---------------------------------------------------------------------- report
@dataclass
class BoundsReport:
    """Measured real-bounds quantities keyed by (level, critical point)."""

    rows: dict = field(default_factory=dict)

    def set(self, k: int, q: int, name: str, value: float) -> None:
        self.rows[(k, q, name)] = float(value)

    def get(self, k: int, q: int, name: str, default=None):
        return self.rows.get((k, q, name), default)

    def series(self, name: str, q: int = 0) -> dict[int, float]:
        return {k: v for (k, qq, n), v in sorted(self.rows.items()) if n == name and qq == q}

    def table(self) -> list[tuple[int, int, str, float]]:
        return [(k, q, n, v) for (k, q, n), v in sorted(self.rows.items())]


def measure_level(report: BoundsReport, level: RenormLevel, parent: RenormLevel | None, deeper: RenormLevel | None, orbit=None, grid: int = GRID) -> None:
    k = level.k
    for q in level.cycle_order():
        lo, hi = monotone_part_stats(level, q, grid)
        report.set(k, q, "phi_deriv_min", lo)
        report.set(k, q, "phi_deriv_max", hi)
        plo, phi = monotone_part_stats(level, q, max(256, grid // 8), partial=True)
        report.set(k, q, "partial_phi_deriv_min", plo)
        report.set(k, q, "partial_phi_deriv_max", phi)
        report.set(k, q, "psi_fold_constant", folding_part_constant(level, q, grid))
        report.set(k, q, "schwarzian_max", schwarzian_negativity(level, q, max(64, grid // 4)))
        report.set(k, q, "orbit_cut_ratio", orbit_cut(level, q))
        report.set(k, q, "critical_preimage_cut_ratio", critical_preimage_cut(level, q))
        report.set(k, q, "boundary_branch_margin", boundary_branch_margin(level, q))
        if deeper is not None and q in deeper.Q0:
            report.set(k, q, "scaling_ratio", scaling_ratio(level, deeper, q))
        if parent is not None and q in parent.Q0:
            h = interval_hierarchy(level, parent, q)
            report.set(k, q, "margin_q0_in_s_left", h.q0_in_s[0])
            report.set(k, q, "margin_q0_in_s_right", h.q0_in_s[1])
            report.set(k, q, "margin_l_in_t_left", h.l_in_t[0])
            report.set(k, q, "margin_l_in_t_right", h.l_in_t[1])
            report.set(k, q, "slack_s_in_l", h.s_in_l)
            report.set(k, q, "slack_t_in_parent", h.t_in_parent)
            report.set(k, q, "slack_s_in_m", h.s_in_m)
        if orbit is not None:
            report.set(k, q, "postcritical_gap", postcritical_gap(level, q, orbit))
    report.set(k, -1, "cycle_length_sum", cycle_length_sum(level))
    if parent is not None:
        to_b, between = boundary_gap_ratio(level, parent)
        report.set(k, -1, "geometry_gap_boundary", to_b)
        report.set(k, -1, "geometry_gap_between", between)
        report.set(k, -1, "return_commensurability", return_commensurability(level, parent))
        report.set(k, -1, "entry_commensurability", entry_commensurability(level, parent))


def bounds_report(tower: list[RenormLevel], grid: int = GRID, postcritical_points: int = 100_000) -> BoundsReport:
    report = BoundsReport()
    if not tower:
        return report
    orbit = postcritical_orbit(tower[0].fmap, postcritical_points)
    for i, level in enumerate(tower):
        parent = tower[i - 1] if i > 0 else None
        deeper = tower[i + 1] if i + 1 < len(tower) else None
        measure_level(report, level, parent, deeper, orbit, grid)
    return report


def log_slope(values: dict[int, float]) -> float:
    """Least-squares slope of log(value) against level."""
    ks = np.array(sorted(values), dtype=float)
    vs = np.log(np.array([values[int(k)] for k in ks]))
    if len(ks) < 2:
        return 0.0
    return float(np.polyfit(ks, vs, 1)[0])


def geometric_rate(values: dict[int, float]) -> float:
    return float(np.exp(log_slope(values)))
