"""Polynomial-like extensions of the first return map f^{N_k}: U -> V.

V is a round disk of radius C|P| about the midpoint of P, slit along the
real line outside T = T^k_p.  Its boundary is sampled as a closed loop and
pulled back once around the k-cycle by analytic continuation along the
loop (exactly for quadratics by tracking crossings of the square-root
cut, otherwise by nearest-preimage steps refined near critical values).
A monotone step closes the loop after one turn; a fold step needs two
turns (the loop winds once around the critical value), which produces
the doubled preimage loop.  The result is the boundary of U.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import tau_geom
from .errors import ContractionUnattainable, NotNested, PullbackFailure
from .intervals import Interval
from .maps import AnalyticMap
from .modulus import GRID, Circle, JordanPolyline, SlitDomain, grid_modulus, modulus_lower_bound, round_modulus
from .poincare import poincare_angle
from .pullback import Step, cycle_steps, k_cycle_endpoints, ray_angle
from .real_bounds import interval_hierarchy, postcritical_gap, postcritical_orbit
from .renormalization import RenormLevel

CONTRACTION = 0.1
SCALE_RANGE = (2.0, 1e3)
N_BOUNDARY = 64
OVERSAMPLE = 16
MAX_OVERSAMPLE = 256
SLIT_OFFSET = 1e-8
TIP_WEIGHT = 4
AMBIGUITY = 0.5
ESCAPE_HORIZON = 500
JULIA_GRID = 160
INVERSE_SAMPLES = 4000
POLYLIKE_TOL = 1e-9


# ---------------------------------------------------------------------- the outer domain
@dataclass(frozen=True)
class BoundaryLoop:
    """Counterclockwise samples of the boundary of a slit disk.

    ``on_arc`` marks samples on the circle; the loop starts at a real point
    of T so that every pullback of it starts on the real line too.
    """

    points: np.ndarray
    on_arc: np.ndarray


def slit_disk(P: Interval, T: Interval, scale: float) -> SlitDomain:
    """Disk of radius scale*|P| about mid(P), slit along the real line outside T."""
    rho = scale * P.length
    m = P.mid
    slits = []
    if T.lo > m - rho:
        slits.append(Interval(m - rho, T.lo))
    if T.hi < m + rho:
        slits.append(Interval(T.hi, m + rho))
    return SlitDomain(Circle(complex(m), rho), tuple(slits))


def boundary_loop(V: SlitDomain, n: int, eta: float | None = None) -> BoundaryLoop:
    """About n samples of dV, the two sides of each slit offset by +-i*eta."""
    m, rho = V.outer.center.real, V.outer.radius
    eta = SLIT_OFFSET * rho if eta is None else eta
    left = next((s for s in V.slits if s.lo <= m - rho + 1e-15 * rho), None)
    right = next((s for s in V.slits if s.hi >= m + rho - 1e-15 * rho), None)
    phi0 = eta / rho

    # pieces: (weight, sampler on s in [0, 1), on_arc)
    pieces = []

    def arc(a0, a1):
        return (rho * abs(a1 - a0), lambda s: m + rho * np.exp(1j * (a0 + s * (a1 - a0))), True)

    def side(x0, x1, y):
        return (abs(x1 - x0), lambda s: x0 + s * (x1 - x0) + 1j * y, False)

    def tip(x, a0, a1):
        return (None, lambda s: x + eta * np.exp(1j * (a0 + s * (a1 - a0))), False)

    if right is not None:
        pieces.append(tip(right.lo, np.pi, 0.5 * np.pi))
        pieces.append(side(right.lo, m + rho * np.cos(phi0), eta))
        a0 = phi0
    else:
        a0 = 0.0
    if left is not None:
        pieces.append(arc(a0, np.pi - phi0))
        pieces.append(side(m - rho * np.cos(phi0), left.hi, eta))
        pieces.append(tip(left.hi, 0.5 * np.pi, -0.5 * np.pi))
        pieces.append(side(left.hi, m - rho * np.cos(phi0), -eta))
        a_mid = np.pi + phi0
    else:
        a_mid = a0
        pieces.append(arc(a0, np.pi))
        a_mid = np.pi
    if right is not None:
        pieces.append(arc(a_mid, 2 * np.pi - phi0))
        pieces.append(side(m + rho * np.cos(phi0), right.lo, -eta))
        pieces.append(tip(right.lo, 1.5 * np.pi, np.pi))
    else:
        pieces.append(arc(a_mid, 2 * np.pi))

    n_tips = sum(w is None for w, _, _ in pieces)
    budget = max(n - TIP_WEIGHT * n_tips, 4 * len(pieces))
    total = sum(w for w, _, _ in pieces if w is not None)
    counts = [TIP_WEIGHT if w is None else max(2, int(round(budget * w / total))) for w, _, _ in pieces]
    pts, arc_mask = [], []
    for (_, g, is_arc), c in zip(pieces, counts):
        s = np.arange(c) / c
        pts.append(g(s))
        arc_mask.append(np.full(c, is_arc))
    return BoundaryLoop(np.concatenate(pts).astype(complex), np.concatenate(arc_mask))


# ---------------------------------------------------------------------- loop pullback
def preimage_candidates(fmap: AnalyticMap, w: np.ndarray) -> np.ndarray:
    """All preimages of each w, shape (len(w), d)."""
    w = np.asarray(w, dtype=complex)
    if fmap.folds is None:
        c = np.array(fmap.coeffs, dtype=complex)
        d = len(c) - 1
        comp = np.zeros((len(w), d, d), dtype=complex)
        comp[:, 1:, :-1] = np.eye(d - 1)
        low = np.broadcast_to(c[:-1], (len(w), d)).copy()
        low[:, 0] -= w
        comp[:, :, -1] = -low / c[-1]
        return np.linalg.eigvals(comp)
    return np.stack([fmap.lap_inverse_array(i, w) for i in range(len(fmap.laps))], axis=1)


def _continue_segment(fmap: AnalyticMap, w0: complex, w1: complex, z0: complex, max_halvings: int = 60) -> complex:
    """Continue the preimage z0 of w0 along the straight segment to w1."""
    t, h, z = 0.0, 1.0, z0
    halvings = 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        c = preimage_candidates(fmap, np.array([w0 + (t + h) * (w1 - w0)]))[0]
        d = np.abs(c - z)
        order = np.argsort(d)
        if len(d) > 1 and d[order[0]] > 0.25 * d[order[1]]:
            h *= 0.5
            halvings += 1
            if halvings > max_halvings:
                raise PullbackFailure("continuation step underflow near a critical value")
            continue
        t, z = t + h, c[order[0]]
        h *= 2.0
    return complex(z)


def pull_loop(fmap: AnalyticMap, step: Step, w: np.ndarray, max_turns: int = 8) -> tuple[np.ndarray, int]:
    """Continue the step's branch along the closed polyline w.

    Returns the preimage loop and the number of turns of w it took to
    close (1 for a univalent branch, 2 around a simple fold).  Segments
    where the nearest preimage is ambiguous are walked adaptively.
    """
    w = np.asarray(w, dtype=complex)
    z0 = complex(np.asarray(fmap.lap_inverse_array(step.lap, w[:1]))[0])
    cands = preimage_candidates(fmap, w)
    first = cands[0][int(np.argmin(np.abs(cands[0] - z0)))]
    n = len(w)
    out = []
    cur = first
    for turn in range(max_turns):
        seg = np.empty(n, dtype=complex)
        seg[0] = cur
        for i in range(1, n + 1):
            c = cands[i % n]
            d = np.abs(c - cur)
            order = np.argsort(d)
            if len(d) > 1 and d[order[0]] > AMBIGUITY * d[order[1]]:
                cur = _continue_segment(fmap, w[i - 1], w[i % n], cur)
            else:
                cur = c[order[0]]
            if i < n:
                seg[i] = cur
        out.append(seg)
        if abs(cur - first) <= 1e-9 * max(1.0, abs(first)):
            return np.concatenate(out), turn + 1
    raise PullbackFailure("loop continuation did not close")


def _pull_loop_quadratic(fmap: AnalyticMap, step: Step, w: np.ndarray) -> tuple[np.ndarray, int]:
    """Exact continuation for a quadratic: the sign of the square root
    flips exactly where a polyline edge crosses the branch cut."""
    a = fmap.coeffs[2]
    crit = fmap.positions[0]
    u = (w - fmap.evaluate(crit)) / a + 0.0
    s = np.sqrt(u)
    z0 = complex(np.asarray(fmap.lap_inverse_array(step.lap, w[:1]))[0])
    sign0 = 1.0 if abs((crit + s[0]) - z0) <= abs((crit - s[0]) - z0) else -1.0
    prev = np.roll(u, 1)
    upper, upper_prev = u.imag >= 0, prev.imag >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        x = prev.real + (u.real - prev.real) * prev.imag / (prev.imag - u.imag)
    cross = (upper != upper_prev) & (x < 0)
    flip = np.where(cross, -1.0, 1.0)
    wrap = flip[0]
    flip[0] = sign0
    signs = np.cumprod(flip)
    seg = crit + signs * s
    if signs[-1] * wrap == sign0:
        return seg, 1
    return np.concatenate([seg, 2 * crit - seg]), 2


def pull_loop_once(fmap: AnalyticMap, step: Step, w: np.ndarray) -> tuple[np.ndarray, int]:
    if fmap._quadratic:
        return _pull_loop_quadratic(fmap, step, w)
    return pull_loop(fmap, step, w)


@dataclass
class LoopPullback:
    """The boundary loop of V pulled back once around the k-cycle."""

    loop: np.ndarray
    turns: tuple[int, ...]
    domains: dict = field(default_factory=dict)

    def source_index(self, n: int) -> np.ndarray:
        """Index of the dV sample each final loop point comes from."""
        return np.arange(len(self.loop)) % n


def pull_back_loop(level: RenormLevel, w: np.ndarray, signs=None) -> LoopPullback:
    fmap = level.fmap
    steps = cycle_steps(level, signs)
    cur = np.asarray(w, dtype=complex)
    turns, domains = [], {}
    for st in steps:
        cur, t = pull_loop_once(fmap, st, cur)
        fold = st.tag[0] in "+-"
        if not fold and t != 1:
            raise PullbackFailure(f"monotone step {st.tag} does not close the loop ({t} turns)")
        turns.append(t)
        if fold:
            domains[int(st.tag[2:])] = cur
    return LoopPullback(cur, tuple(turns), domains)


# ---------------------------------------------------------------------- construction
@dataclass
class PolyLikeExtension:
    k: int
    V: SlitDomain
    U: JordanPolyline
    modulus_lower_bound: float
    diam_ratio: float
    julia_angle: float = float("nan")
    unbranched_flag: bool = False
    disk_scale: float = float("nan")
    contraction: float = float("nan")
    P: Interval | None = None
    T: Interval | None = None
    boundary: np.ndarray = field(default=None, repr=False)
    V_polyline: JordanPolyline | None = field(default=None, repr=False)
    domains: dict = field(default_factory=dict, repr=False)
    sector_angle: float = float("nan")
    unbranched_margin: float = float("nan")
    postcritical_delta: float = float("nan")
    julia_points: np.ndarray = field(default=None, repr=False)
    polylike_residual: float = float("nan")

    def summary(self) -> dict:
        return {
            "k": self.k,
            "disk_scale": self.disk_scale,
            "contraction": self.contraction,
            "modulus_lower_bound": self.modulus_lower_bound,
            "diam_ratio": self.diam_ratio,
            "julia_angle": self.julia_angle,
            "sector_angle": self.sector_angle,
            "unbranched_flag": self.unbranched_flag,
            "unbranched_margin": self.unbranched_margin,
            "postcritical_delta": self.postcritical_delta,
            "polylike_residual": self.polylike_residual,
            "u_vertices": len(self.U),
        }


@dataclass
class _Trial:
    scale: float
    V: SlitDomain
    loop: BoundaryLoop
    pullback: LoopPullback
    factor: float
    oversample: int


def _trial(level: RenormLevel, T: Interval, scale: float, n: int, oversample: int) -> _Trial:
    V = slit_disk(level.P, T, scale)
    os_ = oversample
    while True:
        loop = boundary_loop(V, n * os_)
        try:
            pb = pull_back_loop(level, loop.points)
            break
        except PullbackFailure:
            if os_ >= MAX_OVERSAMPLE:
                raise
            os_ *= 4
    src = pb.source_index(len(loop.points))
    arc = loop.on_arc[src]
    P = level.P
    factor = float(np.max(P.distance(pb.loop[arc]) / P.distance(loop.points[src][arc])))
    return _Trial(scale, V, loop, pb, factor, os_)


def _boundary_margin(V: SlitDomain, z: np.ndarray) -> np.ndarray:
    d = V.outer.radius - np.abs(z - V.outer.center)
    for s in V.slits:
        d = np.minimum(d, s.distance(z))
    return d


def find_disk_scale(level: RenormLevel, T: Interval, n: int = N_BOUNDARY, oversample: int = OVERSAMPLE,
                    contraction: float = CONTRACTION, scale_range=SCALE_RANGE, iters: int = 12) -> _Trial:
    """Smallest scale C in scale_range (geometric scan, then bisection) with
    dist(z_{-N}, P) <= contraction * dist(z, P) on the arc samples of dD."""
    lo_s, hi_s = scale_range
    best: _Trial | None = None
    prev_bad = None
    C = lo_s
    while C <= hi_s * (1 + 1e-12):
        try:
            t = _trial(level, T, C, n, oversample)
        except PullbackFailure:
            t = None
        if t is not None:
            if best is None or t.factor < best.factor:
                best = t
            if t.factor <= contraction:
                good = t
                break
        prev_bad = C
        C *= 1.5
    else:
        if best is None:
            raise ContractionUnattainable("no scale gives a closed pullback", float("inf"), float("nan"))
        raise ContractionUnattainable(
            f"best contraction factor {best.factor:.3g} at scale {best.scale:.4g}", best.factor, best.scale
        )
    if prev_bad is not None:
        a, b = prev_bad, good.scale
        for _ in range(iters):
            mid = np.sqrt(a * b)
            try:
                t = _trial(level, T, mid, n, oversample)
            except PullbackFailure:
                a = mid
                continue
            if t.factor <= contraction:
                b, good = mid, t
            else:
                a = mid
    return good


def construct_extension(
    tower: list[RenormLevel],
    k: int,
    disk_scale: float | None = None,
    n_boundary_points: int = N_BOUNDARY,
    oversample: int = OVERSAMPLE,
    grid: int | None = GRID,
    julia: bool = True,
    n_grid: int = JULIA_GRID,
    seed: int = 0,
) -> PolyLikeExtension:
    """Extension f^{N_k}: U -> V at tower level k (1-based)."""
    level = _level(tower, k)
    parent = _level(tower, k - 1) if k > 1 else None
    P = level.P
    p = level.p.index
    T = interval_hierarchy(level, parent, p).T if parent is not None else level.fmap.interval
    if disk_scale is None:
        trial = find_disk_scale(level, T, n_boundary_points, oversample)
    else:
        trial = _trial(level, T, disk_scale, n_boundary_points, oversample)
        if trial.factor > CONTRACTION:
            raise ContractionUnattainable(
                f"contraction factor {trial.factor:.3g} at scale {disk_scale:.4g}", trial.factor, disk_scale
            )
    V, os_ = trial.V, trial.oversample
    U = JordanPolyline(trial.pullback.loop[::os_])
    margin = float(np.min(_boundary_margin(V, U.vertices)))
    if not (np.all(V.contains(U.vertices)) and margin > tau_geom(level.fmap) * V.diameter):
        raise NotNested(f"U is not compactly inside V (margin {margin:.3g})")
    ext = PolyLikeExtension(
        k=k,
        V=V,
        U=U,
        modulus_lower_bound=extension_modulus(V, U, P, grid),
        diam_ratio=V.diameter / P.length,
        disk_scale=trial.scale,
        contraction=trial.factor,
        P=P,
        T=T,
        boundary=trial.loop.points[::os_],
        V_polyline=JordanPolyline(trial.loop.points[::os_]),
        domains={q: JordanPolyline(z[::os_]) for q, z in trial.pullback.domains.items()},
    )
    ext.polylike_residual = polylike_residual(level, ext, trial)
    if julia:
        julia_containment(level, ext, n_grid, seed=seed)
        unbranched_check(level, ext)
    return ext


def _level(tower: list[RenormLevel], k: int) -> RenormLevel:
    for lv in tower:
        if lv.k == k:
            return lv
    raise IndexError(f"tower has no level {k}")


def extension_modulus(V: SlitDomain, U: JordanPolyline, P: Interval, grid: int | None = GRID) -> float:
    """max of the round bound (centres on P) and grid bounds on boxes around U."""
    centers = P.lo + P.length * np.linspace(0.05, 0.95, 19)
    best = modulus_lower_bound(V, U, centers=centers, grid=None)
    if grid:
        x0, x1, y0, y1 = U.box
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        half = 0.5 * max(x1 - x0, y1 - y0)
        for f in (2.0, 4.0, 8.0):
            box = (cx - f * half, cx + f * half, cy - f * half, cy + f * half)
            best = max(best, grid_modulus(V, U, grid, box=box))
    return best


def polylike_residual(level: RenormLevel, ext: PolyLikeExtension, trial: _Trial, samples: int = 200) -> float:
    """max over samples z of dU of dist(f^N(z), dV) / diam V."""
    loop = trial.pullback.loop
    idx = np.linspace(0, len(loop), samples, endpoint=False).astype(int)
    w = level.fmap.iterate(loop[idx], level.period)
    dV = JordanPolyline(trial.loop.points)
    return float(np.max(dV.distance(w)) / ext.V.diameter)


# ---------------------------------------------------------------------- filled Julia set
def escape_classify(level: RenormLevel, U: JordanPolyline, z: np.ndarray, horizon: int = ESCAPE_HORIZON) -> np.ndarray:
    """Points whose f^N-orbit stays in U for ``horizon`` returns."""
    z = np.asarray(z, dtype=complex).ravel()
    alive = U.contains(z)
    cur = z[alive]
    idx = np.nonzero(alive)[0]
    for _ in range(horizon):
        if cur.size == 0:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            cur = level.fmap.iterate(cur, level.period)
        keep = np.isfinite(cur)
        keep[keep] = U.contains(cur[keep])
        alive[idx[~keep]] = False
        cur, idx = cur[keep], idx[keep]
    return alive


def inverse_julia_samples(level: RenormLevel, U: JordanPolyline, count: int = INVERSE_SAMPLES, seed: int = 0) -> np.ndarray:
    """Julia set samples by random backward iteration of f^N inside U, started at dP."""
    rng = np.random.default_rng(seed)
    involved = sorted(level.position)
    z = np.full(count, complex(level.P.a))
    out = []
    for it in range(40):
        nxt = np.empty_like(z)
        choice = rng.integers(0, 2, size=(count, len(involved)))
        for combo in np.unique(choice, axis=0):
            mask = np.all(choice == combo, axis=1)
            signs = {q: "+" if s else "-" for q, s in zip(involved, combo)}
            nxt[mask] = k_cycle_endpoints(level, z[mask], signs)
        ok = U.contains(nxt)
        z = np.where(ok, nxt, z)
        if it >= 10:
            out.append(z[ok])
    return np.concatenate(out) if out else np.empty(0, dtype=complex)


def julia_containment(level: RenormLevel, ext: PolyLikeExtension, n_grid: int = JULIA_GRID,
                      horizon: int = ESCAPE_HORIZON, seed: int = 0) -> float:
    """beta: the largest Poincare angle (relative to P) over filled Julia samples.

    Grid samples of U's bounding box are kept when their f^N-orbit stays in
    U; backward-iteration samples add points of the Julia set itself.
    Also records the sector angle at the periodic boundary point u.
    """
    x0, x1, y0, y1 = ext.U.box
    X, Y = np.meshgrid(np.linspace(x0, x1, n_grid), np.linspace(y0, y1, n_grid))
    grid_pts = (X + 1j * Y).ravel()
    kept = grid_pts[escape_classify(level, ext.U, grid_pts, horizon)]
    pts = np.concatenate([kept, inverse_julia_samples(level, ext.U, seed=seed), [level.P.a, level.P.b]])
    P = level.P
    off = pts[pts.imag != 0]
    ext.julia_angle = float(np.max(poincare_angle(off, P))) if off.size else 0.0
    u = P.a
    direction = 1.0 if P.mid > u else -1.0
    near = off[np.abs(off - u) > 0]
    ext.sector_angle = float(np.max(ray_angle(near, u, direction))) if near.size else 0.0
    ext.julia_points = pts
    return ext.julia_angle


# ---------------------------------------------------------------------- unbranched extensions
@dataclass(frozen=True)
class PointCloud:
    """A compact set given by samples (inner set for the grid modulus)."""

    points: np.ndarray

    def contains(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def boundary_points(self, spacing: float) -> np.ndarray:
        return self.points

    def max_distance(self, c: complex) -> float:
        return float(np.max(np.abs(self.points - c)))


def unbranched_check(level: RenormLevel, ext: PolyLikeExtension, orbit: np.ndarray | None = None,
                     grid: int | None = GRID) -> tuple[bool, float]:
    """delta = postcritical gap of P; the margin is a modulus lower bound of
    the annulus between the filled Julia samples and V cut along the real
    line outside delta-P."""
    if orbit is None:
        orbit = postcritical_orbit(level.fmap)
    delta = postcritical_gap(level, level.p.index, orbit)
    ext.postcritical_delta = delta
    if not delta > 0 or ext.julia_points is None:
        ext.unbranched_flag, ext.unbranched_margin = False, 0.0
        return False, 0.0
    P, V = level.P, ext.V
    grown = P.neighborhood(min(delta, 1e3))
    m, rho = V.outer.center.real, V.outer.radius
    slits = tuple(
        s for s in (Interval(m - rho, grown.lo), Interval(grown.hi, m + rho)) if s.lo < s.hi
    )
    W = SlitDomain(V.outer, slits)
    K = PointCloud(ext.julia_points)
    centers = P.lo + P.length * np.linspace(0.05, 0.95, 19)
    margin = round_modulus(W, K, centers)
    if grid:
        pts = ext.julia_points
        cx, cy = pts.real.mean(), 0.0
        half = 0.5 * max(np.ptp(pts.real), np.ptp(pts.imag), P.length)
        for f in (2.0, 4.0):
            box = (cx - f * half, cx + f * half, cy - f * half, cy + f * half)
            margin = max(margin, grid_modulus(W, K, grid, box=box))
    ext.unbranched_flag, ext.unbranched_margin = bool(margin > 0), float(margin)
    return ext.unbranched_flag, ext.unbranched_margin
