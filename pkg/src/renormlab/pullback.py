"""Complex backward orbits along real chains.

A backward orbit follows a real chain of intervals backwards, inverting f
on the lap that carries each chain interval.  Steps whose chain interval
straddles a critical point use the fold branch on the requested side.  On
top of this sit the k-cycle pullback of a renormalization level and the
sampled checks of the pullback estimates (almost preserved Poincare
neighbourhoods, distortion, folds, sector behaviour, tours along a cycle,
good returns, the inductive step and linear growth of distances).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dynamics import critical_points_in, interval_orbit, maximal_monotone_interval, tau_geom
from .errors import BranchAmbiguity, TrustRegionExit
from .intervals import Interval
from .maps import TAU_NEWTON, AnalyticMap, CriticalPoint
from .poincare import PoincareNbhd, endpoint_angles, poincare_angle
from .renormalization import RenormLevel

EPSILON = 0.05
ANGLE_TOL = 1e-8


# ---------------------------------------------------------------------- angles
def jump_angle(z, J: Interval):
    """min endpoint angle of z to J, with 0 for real points of J."""
    z = np.asarray(z, dtype=complex)
    left, right = endpoint_angles(z, J)
    ang = np.minimum(left, right)
    on_J = (z.imag == 0) & (z.real >= J.lo) & (z.real <= J.hi)
    return np.where(on_J, 0.0, ang)


def vertex_angle(z, vertex: float, J: Interval):
    """Angle at an endpoint ``vertex`` of J between [vertex, z] and the outer ray."""
    z = np.asarray(z, dtype=complex)
    if vertex == J.lo:
        return np.abs(np.angle(J.lo - z))
    if vertex == J.hi:
        return np.abs(np.angle(z - J.hi))
    raise ValueError("vertex must be an endpoint of J")


def ray_angle(z, vertex: float, direction: float):
    """Angle between [vertex, z] and the real ray vertex + direction * R+."""
    z = np.asarray(z, dtype=complex)
    return np.abs(np.angle((z - vertex) * np.sign(direction)))


# ---------------------------------------------------------------------- trust radii
def trust_radius(fmap: AnalyticMap, K: Interval) -> float:
    """Half the distance from K to the nearest critical value off K, capped at
    a quarter of the laps meeting K."""
    values = [fmap.evaluate(c) for c in fmap.positions] + list(fmap.complex_critical_values)
    dists = [K.distance(v) for v in values]
    off = [d for d in dists if d > tau_geom(fmap)]
    d = 0.5 * min(off) if off else np.inf
    laps = [L for L in fmap.laps if L.hi > K.lo and L.lo < K.hi] or [fmap.laps[fmap.lap_index(K.mid)]]
    hull = Interval(min(L.lo for L in laps), max(L.hi for L in laps))
    return float(min(d, 0.25 * hull.length))


# ---------------------------------------------------------------------- orbits
@dataclass
class BackwardOrbit:
    """z_0, z_{-1}, ..., z_{-n} with their companion real intervals.

    ``chain[i]`` is the real interval carried along with ``points[i]`` and
    ``tags[i]`` names the branch used for the step from z_{-i} to z_{-(i+1)}:
    ``lapN`` for a monotone lap, ``+qN`` / ``-qN`` for a fold.
    """

    points: np.ndarray
    chain: tuple[Interval, ...]
    tags: tuple[str, ...]
    eps: float = EPSILON

    @property
    def J(self) -> Interval:
        return self.chain[-1]

    @property
    def n(self) -> int:
        return len(self.points) - 1

    @property
    def start(self) -> complex:
        return complex(self.points[0])

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    @property
    def angles(self) -> np.ndarray:
        """Poincare angle of z_{-i} relative to its companion interval."""
        return np.array([float(poincare_angle(z, J)) for z, J in zip(self.points, self.chain)])

    @property
    def sector_angles(self) -> np.ndarray:
        return np.array([float(jump_angle(z, J)) for z, J in zip(self.points, self.chain)])

    @property
    def jumps(self) -> np.ndarray:
        return self.sector_angles > self.eps

    def fold_signs(self) -> dict[int, str]:
        """Fold sign per step index."""
        return {i: t[0] for i, t in enumerate(self.tags) if t[0] in "+-"}

    def forward_residual(self, fmap: AnalyticMap) -> float:
        """max_i |f(z_{-(i+1)}) - z_{-i}|."""
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(fmap.evaluate(self.points[1:]) - self.points[:-1])))

    def records(self) -> list[tuple]:
        """(i, Re z_{-i}, Im z_{-i}, branch tag, angle, jump flag) per step."""
        ang = self.sector_angles
        tags = list(self.tags) + [""]
        return [(i, z.real, z.imag, tags[i], ang[i], bool(ang[i] > self.eps)) for i, z in enumerate(self.points)]


@dataclass(frozen=True)
class Step:
    """One backward step: invert f on ``lap`` to land near ``companion``."""

    companion: Interval
    lap: int
    tag: str


def _fold_step(fmap: AnalyticMap, companion: Interval, q: CriticalPoint, sign: str) -> Step:
    lap = q.index + 1 if sign == "+" else q.index
    return Step(companion, lap, f"{sign}q{q.index}")


def chain_steps(fmap: AnalyticMap, chain: Sequence[Interval], signs: Mapping[int, str] | None = None) -> list[Step]:
    """Steps pulling back along chain[0] <- chain[1] <- ... (chain[i+1] maps into chain[i]).

    A chain interval containing a critical point q needs ``signs[q.index]``.
    """
    signs = signs or {}
    steps = []
    for K in chain[1:]:
        crit = critical_points_in(fmap, K)
        if crit:
            q = crit[0]
            if q.index not in signs:
                raise BranchAmbiguity(f"{K} straddles critical point {q.index}; a fold sign is required")
            steps.append(_fold_step(fmap, K, q, signs[q.index]))
        else:
            idx = fmap.lap_index(K.mid)
            steps.append(Step(K, idx, f"lap{idx}"))
    return steps


def pull_points(fmap: AnalyticMap, steps: Sequence[Step], z) -> np.ndarray:
    """All backward images of the points z (any shape): array of shape (len(steps)+1, *z.shape)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty((len(steps) + 1,) + z.shape, dtype=complex)
    out[0] = z
    for i, st in enumerate(steps):
        out[i + 1] = fmap.lap_inverse_array(st.lap, out[i])
    return out


def _check_trust(fmap: AnalyticMap, points: np.ndarray, chain: Sequence[Interval]) -> None:
    for i, (z, K) in enumerate(zip(points, chain)):
        r = trust_radius(fmap, K)
        d = float(np.max(K.distance(z)))
        if d > r:
            raise TrustRegionExit(f"z_-{i} at distance {d:.3g} from its chain interval exceeds the trust radius {r:.3g}")


def backward_orbit_along(
    fmap: AnalyticMap,
    J: Interval,
    n: int,
    z: complex,
    signs: Mapping[int, str] | None = None,
    trust: bool = True,
    eps: float = EPSILON,
) -> BackwardOrbit:
    """Backward orbit of z along the orbit J, f(J), ..., f^n(J); z starts near f^n(J).

    Real branches follow the lap of each f^i(J); an interval straddling a
    critical point q is pulled back with the fold sign ``signs[q]``.
    """
    chain = interval_orbit(fmap, J, n)[::-1]
    steps = chain_steps(fmap, chain, signs)
    pts = pull_points(fmap, steps, complex(z))
    if trust:
        _check_trust(fmap, pts, chain)
    return BackwardOrbit(pts, tuple(chain), tuple(st.tag for st in steps), eps)


# ---------------------------------------------------------------------- the k-cycle
def real_itinerary(level: RenormLevel, point: float | None = None) -> dict[int, str]:
    """Fold sign of the periodic boundary point (or ``point``) at every involved critical point."""
    fmap = level.fmap
    x0 = level.boundary_point if point is None else point
    orbit = fmap.orbit(x0, level.period)
    out = {}
    for q, j in level.position.items():
        out[q] = "+" if orbit[j] > level.critical(q).position else "-"
    return out


def boundary_itineraries(level: RenormLevel) -> list[dict[int, str]]:
    return [real_itinerary(level, level.P.a), real_itinerary(level, level.P.b)]


def cycle_steps(level: RenormLevel, signs: Mapping[int, str] | None = None) -> list[Step]:
    """The N_k backward steps from P = Q0(p) once around the cycle back to P."""
    fmap = level.fmap
    signs = dict(real_itinerary(level)) | dict(signs or {})
    p = level.p.index
    out: list[Step] = []
    r = p
    for _ in range(len(level.position)):
        chain = level.chains[r]
        for K in chain[1:]:
            idx = fmap.lap_index(K.mid)
            out.append(Step(K, idx, f"lap{idx}"))
        prev = level.predecessor(r)
        out.append(_fold_step(fmap, level.Q0[prev], level.critical(prev), signs[prev]))
        r = prev
        if r == p:
            break
    return out


def k_cycle_pullback(
    level: RenormLevel,
    z: complex,
    signs: Mapping[int, str] | None = None,
    trust: bool = False,
    eps: float = EPSILON,
) -> BackwardOrbit:
    """Pullback of z (near P) once around the k-cycle with fold signs ``signs``
    (default: the real itinerary of the periodic boundary point)."""
    steps = cycle_steps(level, signs)
    chain = (level.P,) + tuple(st.companion for st in steps)
    pts = pull_points(level.fmap, steps, complex(z))
    if trust:
        _check_trust(level.fmap, pts, chain)
    return BackwardOrbit(pts, chain, tuple(st.tag for st in steps), eps)


def k_cycle_endpoints(level: RenormLevel, z, signs: Mapping[int, str] | None = None) -> np.ndarray:
    """Vectorized z_{-N_k} for an array of start points."""
    return pull_points(level.fmap, cycle_steps(level, signs), z)[-1]


def never_jump_itinerary_check(orbit: BackwardOrbit, level: RenormLevel, eps: float = EPSILON, C: float = 10.0) -> bool:
    """True iff the orbit's fold signs are the itinerary of a point of dP.

    The orbit must satisfy the hypotheses: sector angle at most eps at the
    monotone positions and distance at most C|Q0| at the fold positions.
    """
    ang = orbit.sector_angles
    for i, K in enumerate(orbit.chain):
        fold = i > 0 and orbit.tags[i - 1][0] in "+-"
        if fold and K.distance(orbit.points[i]) > C * K.length:
            raise ValueError(f"z_-{i} is farther than {C}|Q0| from its fold interval")
        if not fold and ang[i] > eps:
            raise ValueError(f"z_-{i} eps-jumps (angle {ang[i]:.3g})")
    signs = {int(t[2:]): t[0] for t in orbit.tags if t[0] in "+-"}
    return any(all(itin[q] == s for q, s in signs.items()) for itin in boundary_itineraries(level))


def epsilon_jump_scan(orbit: BackwardOrbit, chain: Sequence[Interval] | None = None, eps: float = EPSILON) -> list[int]:
    """Indices i where z_{-i} eps-jumps relative to chain[i]."""
    chain = orbit.chain if chain is None else chain
    if len(chain) != len(orbit.points):
        raise ValueError("chain and orbit lengths differ")
    return [i for i, (z, K) in enumerate(zip(orbit.points, chain)) if float(jump_angle(z, K)) > eps]


# ---------------------------------------------------------------------- sampling
def sample_at_distance(J: Interval, count: int, rng: np.random.Generator, lo: float, hi: float) -> np.ndarray:
    """Non-real points z with dist(z, J)/|J| log-uniform in [lo, hi]."""
    out = np.empty(count, dtype=complex)
    filled = 0
    while filled < count:
        m = 4 * (count - filled)
        d = np.exp(rng.uniform(np.log(lo), np.log(hi), m)) * J.length
        phi = rng.uniform(0.0, np.pi, m) * rng.choice([-1.0, 1.0], m)
        x = rng.uniform(J.lo, J.hi, m)
        z = x + d * np.exp(1j * phi)
        ratio = J.distance(z) / J.length
        z = z[(ratio >= lo) & (ratio <= hi) & (np.abs(z.imag) > 1e-3 * d)]
        take = min(len(z), count - filled)
        out[filled : filled + take] = z[:take]
        filled += take
    return out


def sample_in_disk(J: Interval, count: int, rng: np.random.Generator, theta: float = np.pi / 2) -> np.ndarray:
    """Non-real points of D_theta(J), drawn uniformly from its bounding box."""
    D = PoincareNbhd(J, theta)
    arc = D.boundary(64)
    h = float(np.max(np.abs(arc.imag)))
    x0, x1 = min(J.lo, arc.real.min()), max(J.hi, arc.real.max())
    out = []
    while len(out) < count:
        z = rng.uniform(x0, x1, 4 * count) + 1j * rng.uniform(-h, h, 4 * count)
        z = z[D.contains(z) & (np.abs(z.imag) > 1e-6 * J.length)]
        out.extend(z.tolist())
    return np.asarray(out[:count], dtype=complex)


# ---------------------------------------------------------------------- almost preserved neighbourhoods
@dataclass(frozen=True)
class PoincareCheck:
    theta: float
    theta_measured: float
    theta_bound: float
    length_sum: float

    @property
    def log_growth(self) -> float:
        """log(theta_measured / theta) per unit of summed length."""
        return float(np.log(self.theta_measured / self.theta) / self.length_sum) if self.length_sum > 0 else 0.0


def monotone_chain_steps(fmap: AnalyticMap, J: Interval, n: int) -> tuple[list[Interval], list[Step]]:
    chain = interval_orbit(fmap, J, n)[::-1]
    for K in chain[1:]:
        if critical_points_in(fmap, K):
            raise BranchAmbiguity(f"f^{n} is not monotone on {J}")
    return chain, chain_steps(fmap, chain)


def pullback_poincare_bound_check(
    fmap: AnalyticMap, J: Interval, n: int, theta: float, samples: int = 64, K_fit: float = 0.0
) -> PoincareCheck:
    """Pull the boundary of D_theta(f^n(J)) back along the orbit of J and
    measure the Poincare angle of the result relative to J."""
    chain, steps = monotone_chain_steps(fmap, J, n)
    total = float(sum(K.length for K in chain))
    if n == 0:
        return PoincareCheck(theta, theta, theta, total)
    z = PoincareNbhd(chain[0], theta).boundary(samples)
    end = pull_points(fmap, steps, z)[-1]
    measured = float(np.max(poincare_angle(end, J)))
    return PoincareCheck(theta, measured, theta * float(np.exp(K_fit * total)), total)


def random_monotone_chains(
    level: RenormLevel, count: int, rng: np.random.Generator, l0: float | None = None
) -> list[tuple[Interval, int]]:
    """(J, n) with J inside a chain interval R_{-i} of the level and n <= i,
    shrunk about its midpoint until sum_i |f^i(J)| < l0 (default 0.01|I|)."""
    fmap = level.fmap
    l0 = 0.01 * fmap.scale if l0 is None else l0
    pool = [(r, i) for r, ch in level.chains.items() for i in range(1, len(ch))]
    out = []
    while len(out) < count:
        r, i = pool[rng.integers(len(pool))]
        R = level.chains[r][i]
        n = int(rng.integers(1, i + 1))
        a, b = np.sort(rng.uniform(R.lo, R.hi, 2))
        if b - a < 1e-6 * R.length:
            continue
        J = Interval(a, b)
        while sum(K.length for K in interval_orbit(fmap, J, n)) >= l0:
            J = J.scaled(0.5)
        out.append((J, n))
    return out


def fit_growth_constant(checks: Sequence[PoincareCheck], angle_tol: float = ANGLE_TOL) -> float:
    """Smallest K >= 0 with theta_measured <= theta exp(K sum + angle_tol) on every check.

    ``angle_tol`` is the relative rounding floor of a measured angle: float
    inversion near a critical value loses about 1e-9 of relative accuracy.
    """
    k = 0.0
    for c in checks:
        excess = np.log(c.theta_measured / c.theta) - angle_tol
        if excess > 0 and c.length_sum > 0:
            k = max(k, float(excess / c.length_sum))
    return k


def relative_change(a: float, b: float, floor: float = 1e-9) -> float:
    """|a - b| / max(|a|, |b|), with both below ``floor`` counting as equal."""
    scale = max(abs(a), abs(b))
    return 0.0 if scale < floor else abs(a - b) / scale


# ---------------------------------------------------------------------- distortion
def distortion_constant(fmap: AnalyticMap, K: Interval, J: Interval, n: int, z: np.ndarray) -> float:
    """Smallest C with dist(h z, J)/|J| <= C dist(z, f^n J)/|f^n J| for the
    inverse branch h of f^n along K (J inside K, f^n monotone on K)."""
    chain, steps = monotone_chain_steps(fmap, K, n)
    Jn = interval_orbit(fmap, J, n)[-1]
    hz = pull_points(fmap, steps, z)[-1]
    lhs = J.distance(hz) / J.length
    rhs = Jn.distance(z) / Jn.length
    keep = rhs > 0
    return float(np.max(lhs[keep] / rhs[keep]))


def sector_distortion_constant(
    fmap: AnalyticMap, L: Interval, J: Interval, n: int, eps: float, kmax: float, count: int, rng: np.random.Generator
) -> float:
    """Smallest C(delta, eps) with dist(z_{-n}, J)/|J| <= C dist(z, f^n J)/|f^n J|
    over points z in C_{f^n L} with angle(z, f^n J) >= eps and
    dist(z, f^n J) <= kmax |f^n J|."""
    Jn = interval_orbit(fmap, J, n)[-1]
    z = sample_at_distance(Jn, 4 * count, rng, 1e-3, kmax)
    z = z[jump_angle(z, Jn) >= eps][:count]
    return distortion_constant(fmap, L, J, n, z)


# ---------------------------------------------------------------------- folds
def fold_pullback_angle(fmap: AnalyticMap, q: CriticalPoint, J: Interval, theta: float, samples: int = 128) -> float:
    """Smallest angle theta~ with g(D_theta(J)) inside D_theta~(J') for both
    inverse branches g near f(q); J contains f(q) and J' is the maximal
    interval symmetric about q with f(J') inside J."""
    fq = fmap.evaluate(q.position)
    if not J.contains_interior(fq):
        raise ValueError("J must contain the critical value in its interior")
    inner = J.hi if fmap.evaluate(q.position + 1e-6 * fmap.scale) > fq else J.lo
    left = fmap.solve_on_lap(q.index, inner)
    right = fmap.solve_on_lap(q.index + 1, inner)
    Jp = Interval(min(left, right), max(left, right))
    z = PoincareNbhd(J, theta).boundary(samples)
    worst = 0.0
    for lap in (q.index, q.index + 1):
        w = fmap.lap_inverse_array(lap, z)
        worst = max(worst, float(np.max(poincare_angle(w, Jp))))
    return worst


# ---------------------------------------------------------------------- sector checks near a fold
@dataclass
class SectorScan:
    eps: float
    tested: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def endpoint_sector_scan(
    fmap: AnalyticMap, q: CriticalPoint, eps: float, count: int, rng: np.random.Generator, radius: float | None = None
) -> SectorScan:
    """Small J = [a, b] near q on one side of q and z its lap preimage of a
    point in the eps-sector at f(a): then z must lie outside the eps-sector at b."""
    radius = q.local_inverse_radius if radius is None else radius
    radius = min(radius, 0.25 * fmap.scale)
    scan = SectorScan(eps)
    for _ in range(count):
        side = rng.choice([-1.0, 1.0])
        u, v = np.sort(rng.uniform(0.05, 1.0, 2)) * radius
        if v - u < 1e-3 * radius:
            continue
        J = Interval(q.position + side * u, q.position + side * v) if side > 0 else Interval(q.position - v, q.position - u)
        lap = q.index + 1 if side > 0 else q.index
        for a, b in ((J.lo, J.hi), (J.hi, J.lo)):
            fJ = fmap.image(J)
            fa = fmap.evaluate(a)
            s = rng.uniform(0.01, 2.0) * fJ.length
            out = 1.0 if fa == fJ.hi else -1.0
            phi = rng.uniform(-eps, eps)
            w = fa + out * s * np.exp(1j * phi)
            if w.imag == 0.0:
                continue
            z = fmap.lap_inverse(lap, w)
            scan.tested += 1
            if float(vertex_angle(z, b, J)) <= eps:
                scan.violations.append((J.lo, J.hi, a, complex(z)))
    return scan


def fold_sector_scan(fmap: AnalyticMap, q: CriticalPoint, eps: float, count: int, rng: np.random.Generator) -> SectorScan:
    """Near a fold: (i) thin sectors about the outer ray from f(q) pull back
    away from both real rays at q; (ii) a point in a thin sector at q whose
    image lies in a thin sector about the inner ray is a real-branch preimage."""
    fmap_q = fmap.evaluate(q.position)
    probe = fmap.evaluate(q.position + 1e-6 * fmap.scale)
    inner = 1.0 if probe > fmap_q else -1.0
    radius = min(q.local_inverse_radius, 0.25 * fmap.scale)
    scan = SectorScan(eps)
    for _ in range(count):
        s = rng.uniform(1e-3, 1.0) * radius
        phi = rng.uniform(-eps, eps) * 0.999
        w = fmap_q - inner * s * np.exp(1j * phi)
        if w.imag == 0.0:
            continue
        for lap in (q.index, q.index + 1):
            z = fmap.lap_inverse(lap, w)
            scan.tested += 1
            m = min(float(ray_angle(z, q.position, 1.0)), float(ray_angle(z, q.position, -1.0)))
            if m <= eps:
                scan.violations.append(("outer", complex(w), complex(z)))
        r = rng.uniform(1e-3, 1.0) * np.sqrt(radius)
        side = rng.choice([-1.0, 1.0])
        z = q.position + side * r * np.exp(1j * rng.uniform(-eps, eps) * 0.999)
        fz = complex(fmap.evaluate(z))
        if z.imag == 0.0 or float(ray_angle(fz, fmap_q, inner)) >= eps:
            continue
        scan.tested += 1
        back = [fmap.lap_inverse(lap, fz) for lap in (q.index, q.index + 1)]
        if min(abs(b - z) for b in back) > 1e3 * TAU_NEWTON * max(1.0, abs(z)):
            scan.violations.append(("inner", complex(z), fz))
    return scan


def sector_capture_angle(
    fmap: AnalyticMap, x: float, n: int, eps: float, count: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Points z carrying the itinerary of J inside the maximal monotone
    interval L of f^n with f^i(z) in eps-sectors of f^i(J) (i < n) lie in
    D_alpha(L); returns (largest measured alpha, sum_i |f^i(L)|)."""
    L = maximal_monotone_interval(fmap, x, n)
    half = 0.25 * min(x - L.lo, L.hi - x)
    J = Interval(x - half, x + half)
    chain, steps = monotone_chain_steps(fmap, J, n)
    Jn = chain[0]
    worst = 0.0
    for _ in range(count):
        vertex, out = (Jn.lo, -1.0) if rng.random() < 0.5 else (Jn.hi, 1.0)
        w = vertex + out * rng.uniform(0.01, 1.0) * Jn.length * np.exp(1j * rng.uniform(-eps, eps) * 0.999)
        pts = pull_points(fmap, steps, w)
        ang = [float(jump_angle(p, K)) for p, K in zip(pts[:-1], chain[:-1])]
        if max(ang) > eps:
            continue
        worst = max(worst, float(poincare_angle(pts[-1], L)))
    total = float(sum(K.length for K in interval_orbit(fmap, L, n)))
    return worst, total


# ---------------------------------------------------------------------- linear growth
def chain_growth_ratios(level: RenormLevel, q: int, z: np.ndarray) -> np.ndarray:
    """[dist(z_{-(n-1)}, Q_{-(n-1)})/|Q_{-(n-1)}|] / [dist(z, Q0)/|Q0|] along the monotone chain of q."""
    fmap = level.fmap
    chain = level.chains[q]
    steps = chain_steps(fmap, chain)
    end = pull_points(fmap, steps, z)[-1]
    Q, Qn = chain[0], chain[-1]
    return (Qn.distance(end) / Qn.length) / (Q.distance(z) / Q.length)


def cycle_growth_ratios(level: RenormLevel, z: np.ndarray, signs: Mapping[int, str] | None = None) -> np.ndarray:
    """[dist(z_{-N}, P)/|P|] / [dist(z, P)/|P|] once around the k-cycle."""
    end = k_cycle_endpoints(level, z, signs)
    P = level.P
    return P.distance(end) / P.distance(z)


# ---------------------------------------------------------------------- tours, good returns, inductive step
def returns_to_level(level_k: RenormLevel, level_j: RenormLevel, steps: Sequence[Step] | None = None) -> list[tuple[int, int]]:
    """(l, r): times l along the k-cycle whose companion lies in Q0^j(r)."""
    steps = cycle_steps(level_k) if steps is None else steps
    chain = [level_k.P] + [st.companion for st in steps]
    tol = tau_geom(level_k.fmap)
    out = []
    for l, K in enumerate(chain):
        for r, Q in level_j.Q0.items():
            if Q.contains_interval(K, tol):
                out.append((l, r))
                break
    return out


@dataclass
class CycleReturnScan:
    """Measured constants of the tour / good-return / inductive-step estimates
    for start points z in D(T^j_p), pulled back along the k-cycle."""

    k: int
    j: int
    eps: float
    samples: int
    tour_constant: float
    tour_dichotomy_failures: int
    tour_alpha: float
    good_return_constant: float
    good_returns: int
    inductive_failures: int


def cycle_return_scan(
    level_k: RenormLevel,
    level_j: RenormLevel,
    level_next: RenormLevel,
    T_j: Interval,
    T_next: Interval,
    z: np.ndarray,
    eps: float = EPSILON,
) -> CycleReturnScan:
    """Run the level-k pullback of points z in D(T^j_p) and measure:

    * tour: max dist(z_{-l}, Q^k_{-l}) / |R^j_0| over returns l <= min(N_k - 1, N_j);
      the dichotomy "z_{-N_j} in D(T^j) or an eps-jump at a return"; and the
      largest sector angle before l_1 on orbits with no eps-jump at returns;
    * good returns: C(eps) with dist(z_{-(N-1)}, Q_{-(N-1)})/|Q_{-(N-1)}| <= C |Q^j|/|Q^k|
      on orbits with an eps-jump at a return l <= N_{j+1};
    * inductive step: "eps-jump at a return in [N_j, N_{j+1}] or z_{-N_{j+1}} in D(T^{j+1})".
    """
    steps = cycle_steps(level_k)
    chain = [level_k.P] + [st.companion for st in steps]
    pts = pull_points(level_k.fmap, steps, z)
    Nk, Nj = level_k.period, level_j.period
    rets = returns_to_level(level_k, level_j, steps)
    ret_times = np.array([l for l, _ in rets])
    ang = np.stack([jump_angle(pts[l], chain[l]) for l in range(len(chain))])
    dist = np.stack([chain[l].distance(pts[l]) for l in range(len(chain))])
    l1 = min(Nk - 1, Nj)

    in_tour = [(l, r) for l, r in rets if l <= l1]
    tour_c = max(float(np.max(dist[l] / level_j.Q0[r].length)) for l, r in in_tour)
    jump_ret = ang[ret_times] > eps
    dichotomy_fail = 0
    if Nj <= Nk - 1:
        home = PoincareNbhd(T_j, np.pi / 2).contains(pts[Nj])
        early = jump_ret[ret_times <= Nj].any(axis=0)
        dichotomy_fail = int(np.sum(~home & ~early))
    quiet = ~jump_ret[ret_times <= l1].any(axis=0)
    alpha = float(np.max(ang[:l1, quiet])) if quiet.any() and l1 > 0 else 0.0

    Nj1 = min(Nk - 1, level_next.period)
    gr_mask = jump_ret[ret_times <= Nj1].any(axis=0)
    Qn = chain[Nk - 1]
    lhs = Qn.distance(pts[Nk - 1]) / Qn.length
    scale = level_j.P.length / level_k.P.length
    gr_c = float(np.max(lhs[gr_mask] / scale)) if gr_mask.any() else 0.0

    ind_fail = 0
    if level_next.period <= Nk - 1:
        window = (ret_times >= Nj) & (ret_times <= Nj1)
        jumped = jump_ret[window].any(axis=0)
        home = PoincareNbhd(T_j, np.pi / 2).contains(pts[Nj])
        calm = ang[:Nj].max(axis=0) <= max(alpha, eps)
        lands = PoincareNbhd(T_next, np.pi / 2).contains(pts[Nj1])
        ind_fail = int(np.sum(home & calm & ~jumped & ~lands))
    return CycleReturnScan(
        k=level_k.k,
        j=level_j.k,
        eps=eps,
        samples=len(z),
        tour_constant=tour_c,
        tour_dichotomy_failures=dichotomy_fail,
        tour_alpha=alpha,
        good_return_constant=gr_c,
        good_returns=int(np.sum(gr_mask)),
        inductive_failures=ind_fail,
    )


# ---------------------------------------------------------------------- z^ell growth
def quad_growth_bound_check(ell: int, C: float = 2.0, samples: int = 4000, seed: int = 0, radius: float = 20.0) -> tuple[float, float]:
    """Constants (C1, C2) with minimal C1 + C2 such that
    dist(z, P)/|P| <= C1 (dist(z^ell, M)/|M|)^(1/ell) + C2 on random samples
    of the disk of the given radius, for P = [-1, 1] and M the interval of
    length C centred on f(P) = [0, 1]."""
    from scipy.optimize import linprog

    if ell < 2 or ell % 2:
        raise ValueError("ell must be an even integer >= 2")
    rng = np.random.default_rng(seed)
    P = Interval(-1.0, 1.0)
    M = Interval(-0.5 * (C - 1.0), 0.5 * (C + 1.0))
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, samples))
    z = r * np.exp(1j * rng.uniform(0.0, 2 * np.pi, samples))
    lhs = P.distance(z) / P.length
    t = (M.distance(z**ell) / M.length) ** (1.0 / ell)
    res = linprog([1.0, 1.0], A_ub=np.column_stack([-t, -np.ones_like(t)]), b_ub=-lhs, bounds=[(0, None), (0, None)])
    if not res.success:
        raise RuntimeError(res.message)
    c1, c2 = res.x
    return float(c1), float(c2)
