"""Real-analytic multimodal maps: evaluation kernels, critical points,
Schwarzian derivative and local inverse branches."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BranchAmbiguity,
    BranchCutViolation,
    ConfigError,
    CriticalPointSingularity,
    InvalidMap,
    NewtonDivergence,
)
from .intervals import Interval

try:  # pragma: no cover - exercised implicitly depending on interpreter
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

TAU_ROOT = 1e-13
TAU_NEWTON = 1e-12
TAU_BOUNDARY = 1e-9


@dataclass(frozen=True)
class CriticalPoint:
    position: float
    criticality: int
    local_inverse_radius: float
    index: int = 0


@dataclass(frozen=True)
class FoldPiece:
    """x -> c * (a x + b)**ell + d."""

    a: float
    b: float
    ell: int
    c: float
    d: float

    def jet(self, z):
        u = self.a * z + self.b
        ell = self.ell
        val = self.c * u**ell + self.d
        d1 = self.c * ell * self.a * u ** (ell - 1)
        d2 = self.c * ell * (ell - 1) * self.a**2 * u ** (ell - 2)
        d3 = self.c * ell * (ell - 1) * (ell - 2) * self.a**3 * u ** (ell - 3) if ell >= 3 else 0.0 * u
        return val, d1, d2, d3

    def as_polynomial(self) -> np.polynomial.Polynomial:
        inner = np.polynomial.Polynomial([self.b, self.a])
        return self.c * inner**self.ell + self.d


def _horner(coeffs: Sequence[float], z):
    acc = 0.0 * z + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def _compose_jets(outer, inner):
    g0, g1, g2, g3 = outer
    _, h1, h2, h3 = inner
    return (
        g0,
        g1 * h1,
        g2 * h1**2 + g1 * h2,
        g3 * h1**3 + 3.0 * g2 * h1 * h2 + g1 * h3,
    )


def schwarzian_from_jet(d1, d2, d3):
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


class AnalyticMap:
    """A multimodal interval map given as a polynomial or a fold composition.

    The map is immutable after construction.  Critical points are located
    once, classified by criticality, and must all have even criticality.
    """

    def __init__(
        self,
        coeffs: Sequence[float],
        interval: Interval,
        folds: Sequence[FoldPiece] | None = None,
        validate: bool = True,
    ):
        coeffs = [float(c) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        if len(coeffs) < 3:
            raise InvalidMap("map must have degree >= 2")
        self.coeffs = tuple(coeffs)
        self.interval = Interval(interval.lo, interval.hi)
        self.folds = tuple(folds) if folds else None
        self._derivs = [self.coeffs]
        for _ in range(3):
            prev = self._derivs[-1]
            self._derivs.append(tuple(k * prev[k] for k in range(1, len(prev))) or (0.0,))
        self.degree = len(self.coeffs) - 1
        self.scale = self.interval.length
        self._quadratic = self.degree == 2 and self.folds is None
        self.critical_points = tuple(self._locate_critical_points(validate))
        self.positions = [c.position for c in self.critical_points]
        self.complex_critical_values = tuple(self._complex_critical_values())
        self.laps = self._laps()
        if validate:
            self._validate()

    # ------------------------------------------------------------------ construction
    @classmethod
    def polynomial(cls, coeffs: Sequence[float], interval, validate: bool = True) -> "AnalyticMap":
        return cls(coeffs, _as_interval(interval), validate=validate)

    @classmethod
    def from_folds(cls, folds: Sequence[FoldPiece], interval, validate: bool = True) -> "AnalyticMap":
        poly = np.polynomial.Polynomial([0.0, 1.0])
        for piece in folds:
            poly = piece.as_polynomial()(poly)
        return cls(poly.coef, _as_interval(interval), folds=folds, validate=validate)

    @classmethod
    def quadratic(cls, c: float) -> "AnalyticMap":
        """x -> x**2 + c on its invariant interval [-beta, beta]."""
        beta = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * c))
        return cls([c, 0.0, 1.0], Interval(-beta, beta))

    def _locate_critical_points(self, validate: bool) -> list[CriticalPoint]:
        d1 = self._derivs[1]
        if all(abs(c) == 0.0 for c in d1):
            raise InvalidMap("derivative vanishes identically")
        roots = np.roots(list(d1[::-1]))
        lo, hi = self.interval.lo, self.interval.hi
        tol_im = 1e-6 * self.scale
        real = sorted(r.real for r in roots if abs(r.imag) <= tol_im and lo < r.real < hi)
        clusters: list[list[float]] = []
        for r in real:
            if clusters and r - clusters[-1][-1] <= 1e-4 * self.scale:
                clusters[-1].append(r)
            else:
                clusters.append([r])
        found = []
        for cl in clusters:
            c0 = float(np.mean(cl))
            mult = len(cl)
            ell = mult + 1
            h = max(1e-3 * self.scale, 4.0 * (max(cl) - min(cl)))
            a, b = max(lo, c0 - h), min(hi, c0 + h)
            fa, fb = self.derivative(a), self.derivative(b)
            if fa * fb < 0:
                c0 = _bisect_root(self.derivative, a, b, TAU_ROOT * max(1.0, abs(c0)))
                if ell == 2:
                    for _ in range(2):
                        d2 = self.derivative(c0, 2)
                        if d2 != 0.0:
                            c0 -= self.derivative(c0) / d2
            elif validate:
                raise InvalidMap(f"critical point near {c0:.6g} has odd criticality {ell}")
            if validate and ell % 2:
                raise InvalidMap(f"critical point near {c0:.6g} has odd criticality {ell}")
            found.append((c0, ell))
        values = [self.evaluate(c) for c, _ in found]
        img = [self.evaluate(lo), self.evaluate(hi)] + values
        img_lo, img_hi = min(img), max(img)
        out = []
        for i, (c, ell) in enumerate(found):
            fc = values[i]
            cands = [abs(fc - v) for j, v in enumerate(values) if j != i and abs(fc - v) > TAU_ROOT * self.scale]
            cands += [abs(fc - e) for e in (img_lo, img_hi) if abs(fc - e) > 1e-9 * self.scale]
            radius = 0.5 * min(cands) if cands else 0.5 * self.scale
            out.append(CriticalPoint(c, ell, radius, i))
        return out

    def _complex_critical_values(self):
        roots = np.roots(list(self._derivs[1][::-1]))
        tol_im = 1e-6 * self.scale
        return [complex(self.evaluate(complex(r))) for r in roots if abs(r.imag) > tol_im]

    def _laps(self) -> list[Interval]:
        edges = [self.interval.lo] + self.positions + [self.interval.hi]
        return [Interval(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]

    def _validate(self):
        lo, hi = self.interval.lo, self.interval.hi
        tol = TAU_BOUNDARY * self.scale
        for x in (lo, hi):
            y = self.evaluate(x)
            if min(abs(y - lo), abs(y - hi)) > tol:
                raise InvalidMap(f"f({x:.17g}) = {y:.17g} is not a boundary point of I")
        for c in self.positions:
            y = self.evaluate(c)
            if y < lo - tol or y > hi + tol:
                raise InvalidMap(f"critical value {y:.6g} leaves I")

    # ------------------------------------------------------------------ kernels
    def evaluate(self, z):
        if self.folds is not None:
            val = z
            for piece in self.folds:
                u = piece.a * val + piece.b
                val = piece.c * u**piece.ell + piece.d
            return val
        return _horner(self.coeffs, z)

    __call__ = evaluate

    def jet(self, z):
        """(f, f', f'', f''') at z, exact (no finite differences)."""
        if self.folds is not None:
            acc = (z, 1.0 + 0.0 * z, 0.0 * z, 0.0 * z)
            for piece in self.folds:
                acc = _compose_jets(piece.jet(acc[0]), acc)
            return acc
        return tuple(_horner(d, z) for d in self._derivs)

    def derivative(self, z, order: int = 1):
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        if self.folds is not None:
            return self.jet(z)[order]
        return _horner(self._derivs[order], z)

    def schwarzian(self, x):
        _, d1, d2, d3 = self.jet(x)
        if np.any(np.abs(d1) < TAU_ROOT):
            raise CriticalPointSingularity(f"f'(x) vanishes at x={x}")
        return schwarzian_from_jet(d1, d2, d3)

    def orbit(self, x, n: int) -> list:
        out = [x]
        for _ in range(n):
            x = self.evaluate(x)
            out.append(x)
        return out

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self.evaluate(z)
        return z

    def orbit_derivative(self, x, n: int):
        """(f^n(x), Df^n(x)) by the chain rule."""
        d = 1.0 + 0.0 * x
        for _ in range(n):
            d = d * self.derivative(x)
            x = self.evaluate(x)
        return x, d

    # ------------------------------------------------------------------ laps
    def lap_index(self, x: float) -> int:
        return bisect.bisect_right(self.positions, x)

    def lap_image(self, idx: int) -> Interval:
        lap = self.laps[idx]
        return Interval(self.evaluate(lap.a), self.evaluate(lap.b))

    def image(self, J: Interval) -> Interval:
        """Exact image of an interval: endpoint values and interior critical values."""
        vals = [self.evaluate(J.lo), self.evaluate(J.hi)]
        for c in self.positions:
            if J.lo < c < J.hi:
                vals.append(self.evaluate(c))
        return Interval(min(vals), max(vals))

    def solve_on_lap(self, idx: int, t: float) -> float:
        """Real x in lap ``idx`` with f(x) = t (f is monotone there)."""
        lap = self.laps[idx]
        fa, fb = self.evaluate(lap.a) - t, self.evaluate(lap.b) - t
        if fa == 0.0:
            return lap.a
        if fb == 0.0:
            return lap.b
        if fa * fb > 0:
            raise BranchAmbiguity(f"value {t:.17g} outside the image of lap {idx}")
        if self._quadratic:
            return self._quadratic_inverse(idx, t).real
        return brentq(lambda x: self.evaluate(x) - t, lap.a, lap.b, xtol=1e-16 * self.scale, rtol=1e-15)

    def lap_inverse(self, idx: int, w, anchor: float | None = None):
        """Inverse of f restricted to lap ``idx``, continued to the slit plane.

        Real ``w`` must lie in the closed image of the lap.  Non-real ``w``
        is reached by continuation along the straight path from a real
        anchor value inside the image, which never crosses the real axis.
        """
        w = complex(w)
        img = self.lap_image(idx)
        tol = 1e-13 * self.scale
        if abs(w.imag) <= tol * 1e-3:
            t = w.real
            if not img.contains(t, tol):
                raise BranchAmbiguity(f"real value {t:.17g} outside image of lap {idx}")
            return complex(self.solve_on_lap(idx, min(max(t, img.lo), img.hi)))
        if self._quadratic:
            return self._quadratic_inverse(idx, w)
        return self._continued_inverse(idx, w, anchor)

    def lap_inverse_array(self, idx: int, w) -> np.ndarray:
        """Vectorized lap_inverse for an array of complex values."""
        w = np.asarray(w, dtype=complex)
        if self._quadratic:
            return self._quadratic_inverse(idx, w)
        flat = [self.lap_inverse(idx, x) for x in w.ravel()]
        return np.asarray(flat, dtype=complex).reshape(w.shape)

    def _quadratic_inverse(self, idx: int, w):
        a = self.coeffs[2]
        q = self.positions[0]
        fq = self.evaluate(q)
        root = np.sqrt(np.asarray((w - fq) / a, dtype=complex))
        side = 1.0 if self.laps[idx].lo >= q else -1.0
        z = q + side * root
        return complex(z) if np.ndim(z) == 0 else z

    def _continued_inverse(self, idx: int, w: complex, anchor: float | None):
        img = self.lap_image(idx)
        inset = 1e-3 * img.length
        if anchor is None:
            w0 = min(max(w.real, img.lo + inset), img.hi - inset)
            x0 = self.solve_on_lap(idx, w0)
        else:
            x0 = float(anchor)
            w0 = self.evaluate(x0)
        for cv in self.complex_critical_values:
            if _segment_distance(w0, w, cv) < 1e-9 * self.scale:
                raise BranchAmbiguity("continuation path meets a complex critical value")
        z = complex(x0)
        t, dt = 0.0, 0.125
        w0 = complex(w0)
        tol = TAU_NEWTON * self.scale
        while t < 1.0:
            dt = min(dt, 1.0 - t)
            target = w0 + (t + dt) * (w - w0)
            d = self.derivative(z)
            if abs(d) == 0.0:
                raise NewtonDivergence("continuation hit a critical point")
            pred = z + (target - self.evaluate(z)) / d
            zn, ok = _newton(self, target, pred, tol)
            if ok and abs(zn - pred) <= 0.25 * abs(pred - z) + 10 * tol:
                z, t = zn, t + dt
                dt *= 1.5
            else:
                dt *= 0.5
                if dt < 1e-9:
                    raise NewtonDivergence(f"continuation stalled at t={t:.3g}")
        return z

    def critical_point(self, index: int) -> CriticalPoint:
        return self.critical_points[index]

    def to_config(self) -> str:
        lines = []
        if self.folds is not None:
            items = ", ".join(
                f"{{a = {p.a!r}, b = {p.b!r}, ell = {p.ell}, c = {p.c!r}, d = {p.d!r}}}" for p in self.folds
            )
            lines.append(f"folds = [{items}]")
        else:
            lines.append("polynomial = [" + ", ".join(repr(c) for c in self.coeffs) + "]")
        lines.append(f"interval = [{self.interval.lo!r}, {self.interval.hi!r}]")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        kind = "folds" if self.folds else "poly"
        return f"AnalyticMap({kind}, deg={self.degree}, I=[{self.interval.lo:.6g}, {self.interval.hi:.6g}])"


def _as_interval(interval) -> Interval:
    if isinstance(interval, Interval):
        return interval
    a, b = interval
    return Interval(float(a), float(b))


def _bisect_root(g, a: float, b: float, tol: float) -> float:
    ga = g(a)
    for _ in range(200):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0.0 or b - a < tol:
            return m
        if (gm < 0) == (ga < 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def _newton(fmap: AnalyticMap, target: complex, z: complex, tol: float, maxit: int = 40):
    for _ in range(maxit):
        d = fmap.derivative(z)
        if d == 0:
            return z, False
        step = (fmap.evaluate(z) - target) / d
        z = z - step
        if abs(step) <= 1e-15 * (abs(z) + fmap.scale):
            break
    return z, abs(fmap.evaluate(z) - target) <= tol * max(1.0, abs(target))


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    a, b, p = complex(a), complex(b), complex(p)
    ab = b - a
    t = 0.0 if ab == 0 else max(0.0, min(1.0, ((p - a) * ab.conjugate()).real / abs(ab) ** 2))
    return abs(a + t * ab - p)


# ---------------------------------------------------------------------- branches
def evaluate(fmap: AnalyticMap, z):
    return fmap.evaluate(z)


def derivative(fmap: AnalyticMap, z, order: int = 1):
    return fmap.derivative(z, order)


def schwarzian(fmap: AnalyticMap, x):
    return fmap.schwarzian(x)


def fold_branch(ell: int, sign: str, w):
    """Branch of the ell-th root on C minus the negative reals.

    ``sign='+'`` fixes 1 -> 1 and ``sign='-'`` fixes 1 -> -1.
    """
    if ell < 2 or ell % 2:
        raise ValueError("fold criticality must be an even integer >= 2")
    w = complex(w)
    if w.real < 0 and abs(w.imag) <= TAU_ROOT * max(1.0, abs(w)):
        raise BranchCutViolation(f"{w} lies on the slit")
    root = np.exp(np.log(w) / ell) if w != 0 else 0j
    return complex(root if sign == "+" else -root)


def inverse_branch_near_critical_value(fmap: AnalyticMap, q: CriticalPoint, sign: str, w):
    """Real inverse branch f_q^+ (right of q) or f_q^- (left of q) at w."""
    idx = q.index + 1 if sign == "+" else q.index
    img = fmap.lap_image(idx)
    w = complex(w)
    fq = fmap.evaluate(q.position)
    inside = img.hi if abs(img.lo - fq) < abs(img.hi - fq) else img.lo
    # real values on the far side of the critical value lie on the slit
    if abs(w.imag) <= 1e-16 * fmap.scale and (w.real - fq) * (inside - fq) < -TAU_ROOT * fmap.scale:
        raise BranchAmbiguity(f"{w} lies on the slit beyond f(q)")
    return fmap.lap_inverse(idx, w)


# ---------------------------------------------------------------------- configs
def map_from_mapping(data: dict) -> AnalyticMap:
    if "interval" not in data:
        raise ConfigError("map definition needs 'interval = [a, b]'")
    try:
        interval = [float(v) for v in data["interval"]]
        if len(interval) != 2:
            raise ValueError
    except (TypeError, ValueError) as exc:
        raise ConfigError("'interval' must be two decimal numbers") from exc
    if ("polynomial" in data) == ("folds" in data):
        raise ConfigError("give exactly one of 'polynomial' or 'folds'")
    try:
        if "polynomial" in data:
            return AnalyticMap.polynomial([float(c) for c in data["polynomial"]], interval)
        folds = [
            FoldPiece(float(p["a"]), float(p["b"]), int(p.get("ell", p.get("l", 2))), float(p["c"]), float(p["d"]))
            for p in data["folds"]
        ]
        return AnalyticMap.from_folds(folds, interval)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed map definition: {exc}") from exc


def load_map(source: str | Path) -> AnalyticMap:
    """Read a map definition from a TOML file path or TOML text."""
    text = Path(source).read_text() if _is_path(source) else str(source)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse map definition: {exc}") from exc
    return map_from_mapping(data.get("map", data))


def _is_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return "\n" not in source and "=" not in source
