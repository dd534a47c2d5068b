"""Lower bounds for the modulus of an annulus V \\ K.

Two estimators, both lower bounds:

* round annuli: a round annulus about a centre c separating K from the
  boundary of V has modulus log(r_out / r_in) / (2 pi);
* grid capacity: a piecewise-linear test function on a triangulated grid,
  0 on every triangle meeting K and 1 on every triangle meeting the
  complement of V, has Dirichlet energy at least the capacity of the
  annulus, so 1 / energy bounds the modulus from below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from .errors import NotNested
from .intervals import Interval

GRID = 256
MIN_VERTICES = 16


# ---------------------------------------------------------------------- shapes
@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    def max_distance(self, c: complex) -> float:
        return abs(c - self.center) + self.radius

    def boundary_distance(self, c: complex) -> float:
        return self.radius - abs(c - self.center)

    def boundary_points(self, spacing: float) -> np.ndarray:
        n = max(MIN_VERTICES, int(np.ceil(2 * np.pi * self.radius / spacing)))
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)

    @property
    def box(self) -> tuple[float, float, float, float]:
        c, r = self.center, self.radius
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class JordanPolyline:
    """A closed polygon, stored counterclockwise (last vertex joins the first)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).ravel()
        if len(v) < MIN_VERTICES:
            raise ValueError(f"a polyline needs at least {MIN_VERTICES} vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        if _signed_area(v) < 0:
            v = v[::-1]
        object.__setattr__(self, "vertices", v)

    @classmethod
    def circle(cls, center: complex, radius: float, n: int = 64) -> "JordanPolyline":
        return cls(center + radius * np.exp(2j * np.pi * np.arange(n) / n))

    @classmethod
    def square(cls, center: complex, side: float, per_side: int = 16) -> "JordanPolyline":
        h = 0.5 * side
        t = np.linspace(-h, h, per_side, endpoint=False)
        pts = np.concatenate([t - 1j * h, h + 1j * t, -t + 1j * h, -h - 1j * t])
        return cls(center + pts)

    def __len__(self):
        return len(self.vertices)

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.abs(v[:, None] - v[None, :]))) if len(v) <= 4096 else float(np.ptp(v.real) + np.ptp(v.imag))

    @property
    def box(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return v.real.min(), v.real.max(), v.imag.min(), v.imag.max()

    def contains(self, z) -> np.ndarray:
        """Even-odd rule, vectorized over z."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        a, b = self.edges
        out = np.zeros(flat.shape, dtype=bool)
        chunk = max(1, 2_000_000 // len(a))
        for s in range(0, len(flat), chunk):
            x = flat[s : s + chunk, None].real
            y = flat[s : s + chunk, None].imag
            ay, by = a.imag[None, :], b.imag[None, :]
            cross = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a.real[None, :] + (y - ay) * (b.real - a.real)[None, :] / (by - ay)
            out[s : s + chunk] = np.sum(cross & (x < xint), axis=1) % 2 == 1
        return out.reshape(z.shape)

    def distance(self, z) -> np.ndarray:
        """Distance from points z to the polygon's edges."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        a, b = self.edges
        ab = b - a
        L2 = np.abs(ab) ** 2
        out = np.empty(flat.shape)
        chunk = max(1, 2_000_000 // len(a))
        for s in range(0, len(flat), chunk):
            p = flat[s : s + chunk, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(L2 > 0, ((p - a) * np.conj(ab)).real / L2, 0.0)
            t = np.clip(t, 0.0, 1.0)
            out[s : s + chunk] = np.min(np.abs(a + t * ab - p), axis=1)
        return out.reshape(z.shape)

    def max_distance(self, c: complex) -> float:
        return float(np.max(np.abs(self.vertices - c)))

    def boundary_distance(self, c: complex) -> float:
        return float(self.distance(c))

    def boundary_points(self, spacing: float) -> np.ndarray:
        a, b = self.edges
        n = np.maximum(1, np.ceil(np.abs(b - a) / spacing).astype(int))
        return np.concatenate([a[i] + (b[i] - a[i]) * np.arange(n[i]) / n[i] for i in range(len(a))])

    def is_simple(self, tol: float = 0.0) -> bool:
        """No two non-adjacent edges intersect (or come closer than tol)."""
        a, b = self.edges
        n = len(a)
        for i in range(n):
            j = np.arange(i + 2, n)
            if i == 0:
                j = j[j != n - 1]
            if len(j) == 0:
                continue
            if np.any(_segments_intersect(a[i], b[i], a[j], b[j])):
                return False
            if tol > 0 and np.any(_segment_gap(a[i], b[i], a[j], b[j]) < tol):
                return False
        return True

    def refined(self) -> "JordanPolyline":
        a, b = self.edges
        out = np.empty(2 * len(a), dtype=complex)
        out[0::2], out[1::2] = a, 0.5 * (a + b)
        return JordanPolyline(out)


def _signed_area(v: np.ndarray) -> float:
    w = np.roll(v, -1)
    return 0.5 * float(np.sum(v.real * w.imag - w.real * v.imag))


def _orient(a, b, c):
    return np.sign((b - a).real * (c - a).imag - (b - a).imag * (c - a).real)


def _segments_intersect(a, b, c, d) -> np.ndarray:
    return (_orient(a, b, c) * _orient(a, b, d) < 0) & (_orient(c, d, a) * _orient(c, d, b) < 0)


def _point_segment(p, a, b):
    ab = b - a
    L2 = np.abs(ab) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(L2 > 0, ((p - a) * np.conj(ab)).real / L2, 0.0)
    return np.abs(a + np.clip(t, 0, 1) * ab - p)


def _segment_gap(a, b, c, d):
    return np.minimum.reduce([_point_segment(a, c, d), _point_segment(b, c, d), _point_segment(c, a, b), _point_segment(d, a, b)])


@dataclass(frozen=True)
class SlitDomain:
    """A Jordan domain (or round disk) with real segments removed."""

    outer: Circle | JordanPolyline
    slits: tuple[Interval, ...] = ()

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        inside = np.asarray(self.outer.contains(z))
        for s in self.slits:
            inside &= ~((z.imag == 0) & (z.real >= s.lo) & (z.real <= s.hi))
        return inside

    def boundary_distance(self, c: complex) -> float:
        d = self.outer.boundary_distance(c)
        for s in self.slits:
            d = min(d, float(s.distance(complex(c))))
        return d

    @property
    def box(self):
        return self.outer.box

    @property
    def diameter(self) -> float:
        return self.outer.diameter


def _as_domain(V) -> SlitDomain:
    return V if isinstance(V, SlitDomain) else SlitDomain(V)


# ---------------------------------------------------------------------- estimators
def round_modulus(V, K, centers) -> float:
    """max over centres c of log(r_out / r_in) / (2 pi), clipped at 0."""
    V = _as_domain(V)
    best = 0.0
    for c in np.atleast_1d(np.asarray(centers, dtype=complex)):
        r_in = K.max_distance(complex(c))
        r_out = V.boundary_distance(complex(c))
        if r_in > 0 and r_out > r_in:
            best = max(best, float(np.log(r_out / r_in) / (2 * np.pi)))
    return best


def grid_modulus(V, K, n: int = GRID, box=None) -> float:
    """Lower bound 1 / E(u) from the discrete harmonic function on an n x n grid.

    u is pinned to 0 on all nodes of grid cells meeting K and to 1 on all
    nodes of cells meeting the complement of V; the 5-point energy of the
    minimiser equals the Dirichlet energy of its piecewise-linear
    interpolant on the right-triangle split of the grid.
    """
    V = _as_domain(V)
    x0, x1, y0, y1 = V.box if box is None else box
    side = 1.02 * max(x1 - x0, y1 - y0)
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    h = side / n
    xs = cx - 0.5 * side + h * np.arange(n + 1)
    ys = cy - 0.5 * side + h * np.arange(n + 1)
    if V.slits:
        # put a grid row on the real axis so that slits run along grid edges
        ys = ys - ys[np.argmin(np.abs(ys))]
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    Z = X + 1j * Y
    reach = 1.6 * h

    zero = np.asarray(K.contains(Z))
    zero |= _near(Z, K.boundary_points(h / 4), reach, xs, ys, h)
    one = ~np.asarray(V.outer.contains(Z))
    one |= _near(Z, V.outer.boundary_points(h / 4), reach, xs, ys, h)
    for s in V.slits:
        one |= (np.abs(Y) < reach) & (X >= s.lo - reach) & (X <= s.hi + reach)
    one[0, :] = one[-1, :] = one[:, 0] = one[:, -1] = True
    if np.any(zero & one):
        return 0.0
    return 1.0 / _dirichlet_energy(zero, one)


def _near(Z, pts, reach, xs, ys, h) -> np.ndarray:
    """Mask of grid nodes within ``reach`` of any of the points."""
    mask = np.zeros(Z.shape, dtype=bool)
    k = int(np.ceil(reach / h))
    ix = np.round((pts.real - xs[0]) / h).astype(int)
    iy = np.round((pts.imag - ys[0]) / h).astype(int)
    for dx in range(-k, k + 1):
        for dy in range(-k, k + 1):
            jx, jy = ix + dx, iy + dy
            ok = (jx >= 0) & (jx < len(xs)) & (jy >= 0) & (jy < len(ys))
            jx, jy, p = jx[ok], jy[ok], pts[ok]
            close = np.abs(xs[jx] + 1j * ys[jy] - p) <= reach
            mask[jy[close], jx[close]] = True
    return mask


def _dirichlet_energy(zero: np.ndarray, one: np.ndarray) -> float:
    u = one.astype(float)
    free = ~(zero | one)
    nf = int(free.sum())
    if nf:
        idx = np.full(zero.shape, -1, dtype=int)
        idx[free] = np.arange(nf)
        diag = np.zeros(nf)
        rhs = np.zeros(nf)
        rows, cols = [], []
        for a, b in ((np.s_[:, :-1], np.s_[:, 1:]), (np.s_[:-1, :], np.s_[1:, :])):
            for s, t in ((a, b), (b, a)):
                m = free[s]
                i = idx[s][m]
                np.add.at(diag, i, 1.0)
                nb_free = free[t][m]
                rows.append(i[nb_free])
                cols.append(idx[t][m][nb_free])
                np.add.at(rhs, i[~nb_free], u[t][m][~nb_free])
        r = np.concatenate(rows + [np.arange(nf)])
        c = np.concatenate(cols + [np.arange(nf)])
        v = np.concatenate([-np.ones(sum(len(x) for x in rows)), diag])
        A = coo_matrix((v, (r, c)), shape=(nf, nf)).tocsr()
        u[free] = spsolve(A, rhs)
    return float(np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2))


def modulus_lower_bound(V, K, centers=None, grid: int | None = GRID) -> float:
    """Larger of the round-annulus and grid lower bounds for mod(V \\ K)."""
    V = _as_domain(V)
    probe = K.vertices if isinstance(K, JordanPolyline) else K.boundary_points(K.diameter / 64)
    if not np.all(V.contains(probe)):
        raise NotNested("the inner domain is not contained in the outer one")
    if centers is None:
        centers = [np.mean(probe)]
    best = round_modulus(V, K, centers)
    if grid:
        best = max(best, grid_modulus(V, K, grid))
    return best
