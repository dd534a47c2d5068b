"""Run configuration, tower caching and the per-level report bundle.

Tabular outputs are comma-separated with a header row and decimals at 17
significant digits; the run summary is indented JSON with sorted keys.
Nothing time- or order-dependent reaches an output file, so identical
configurations give byte-identical reports.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, maps, modulus, polylike, real_bounds
from .errors import CacheMissing, ConfigError, InsufficientDepth
from .maps import AnalyticMap, map_from_mapping
from .pullback import (
    EPSILON,
    cycle_growth_ratios,
    fit_growth_constant,
    k_cycle_pullback,
    chain_growth_ratios,
    never_jump_itinerary_check,
    pullback_poincare_bound_check,
    random_monotone_chains,
    sample_at_distance,
)
from .renormalization import RenormLevel, build_tower, level_from_record, level_record, verify_standard_conditions

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

DEEP_LEVEL = 3
TOLERANCES = {
    "tau_root": maps.TAU_ROOT,
    "tau_newton": maps.TAU_NEWTON,
    "tau_boundary": maps.TAU_BOUNDARY,
    "geom_rel": dynamics.GEOM_REL,
}


# ---------------------------------------------------------------------- configuration
@dataclass
class RunConfig:
    map_definition: dict
    p: int = 0
    depth: int = 6
    max_period: int = 16
    max_ratio: int = 4
    eps: float = EPSILON
    bounds_grid: int = real_bounds.GRID
    modulus_grid: int = modulus.GRID
    julia_grid: int = polylike.JULIA_GRID
    n_boundary: int = polylike.N_BOUNDARY
    postcritical_points: int = 100_000
    samples: int = 50
    chains: int = 20
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    out: str = "out"
    cache: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if not 0.0 < self.eps < math.pi / 2:
            raise ConfigError("eps must lie in (0, pi/2)")
        for name in ("max_period", "max_ratio", "bounds_grid", "modulus_grid", "julia_grid", "n_boundary",
                     "postcritical_points", "samples", "chains"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.n_boundary < 16:
            raise ConfigError("n_boundary must be at least 16")
        for name, value in self.tolerances.items():
            if name not in TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}")
            if not value > 0:
                raise ConfigError(f"tolerance {name} must be positive")
            if value != TOLERANCES[name]:
                raise ConfigError(f"tolerance {name} is fixed at {TOLERANCES[name]!r} in this build")

    def fmap(self) -> AnalyticMap:
        return map_from_mapping(self.map_definition)

    def refined(self) -> "RunConfig":
        data = asdict(self)
        data["n_boundary"] *= 2
        data["julia_grid"] *= 2
        return RunConfig(**data)

    def cache_key(self) -> str:
        """Content hash of the map definition, tower parameters and tolerances."""
        payload = {
            "map": self.fmap().to_config(),
            "p": self.p,
            "depth": self.depth,
            "max_period": self.max_period,
            "max_ratio": self.max_ratio,
            "tolerances": {k: repr(v) for k, v in sorted(self.tolerances.items())},
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def load_config(source: str | Path, **overrides) -> RunConfig:
    """RunConfig from a TOML file with a [map] table and an optional [run] table."""
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc
    if "map" not in data:
        raise ConfigError("config needs a [map] table")
    run = dict(data.get("run", {}))
    run.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(map_definition=data["map"], **run)
    except TypeError as exc:
        raise ConfigError(f"bad [run] table: {exc}") from exc
    cfg.fmap()
    return cfg


# ---------------------------------------------------------------------- tower cache
def cache_path(cfg: RunConfig) -> Path:
    return Path(cfg.out) / "cache" / f"tower-{cfg.cache_key()}.json"


def obtain_tower(cfg: RunConfig, compute: bool = True) -> list[RenormLevel]:
    fmap = cfg.fmap()
    path = cache_path(cfg)
    if cfg.cache and path.exists():
        records = json.loads(path.read_text())
        return [level_from_record(fmap, rec) for rec in records["levels"]]
    if not compute:
        raise CacheMissing(f"no cached tower at {path}")
    tower = build_tower(fmap, cfg.p, cfg.depth, cfg.max_period, cfg.max_ratio)
    if cfg.cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dumps({"levels": [level_record(lv) for lv in tower]}))
    return tower


# ---------------------------------------------------------------------- formatting
def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else fmt(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------- measurements
def tower_rows(tower: list[RenormLevel]) -> list[tuple]:
    rows = []
    for i, lv in enumerate(tower):
        ratio = tower[i + 1].period / lv.period if i + 1 < len(tower) else float("nan")
        rows.append((lv.k, lv.period, lv.P.a, lv.P.b, lv.P.length, ratio))
    return rows


def pullback_constants(level: RenormLevel, samples: int, chains: int, eps: float, seed: int) -> dict:
    """Measured constants of the complex pullback estimates at one level."""
    rng = np.random.default_rng([seed, level.k])
    P = level.P
    z = sample_at_distance(P, samples, rng, 0.5, 5.0)
    checks = [pullback_poincare_bound_check(level.fmap, J, n, np.pi / 2, 32) for J, n in random_monotone_chains(level, chains, rng)]
    tested = passed = 0
    for zz in z:
        orbit = k_cycle_pullback(level, zz, eps=eps)
        try:
            ok = never_jump_itinerary_check(orbit, level, eps)
        except ValueError:
            continue
        tested += 1
        passed += ok
    return {
        "linear_growth_C": float(np.max(cycle_growth_ratios(level, z))),
        "chain_growth_C": float(np.max(chain_growth_ratios(level, level.p.index, z))),
        "poincare_K_fit": fit_growth_constant(checks),
        "poincare_ratio_max": float(max(c.theta_measured / c.theta for c in checks)),
        "never_jump_tested": tested,
        "never_jump_passed": passed,
    }


@dataclass
class ReportBundle:
    """Everything a run reports, keyed by level."""

    config_key: str
    tower: list[dict] = field(default_factory=list)
    bounds: list[tuple] = field(default_factory=list)
    pullback: dict = field(default_factory=dict)
    extensions: dict = field(default_factory=dict)
    matrix: dict = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)

    def mark(self, check: str, k: int, passed: bool) -> None:
        self.matrix.setdefault(check, {})[k] = bool(passed)

    @property
    def all_passed(self) -> bool:
        return all(all(v.values()) for v in self.matrix.values())

    def summary(self) -> dict:
        return {
            "config_key": self.config_key,
            "levels": [rec["k"] for rec in self.tower],
            "periods": [rec["period"] for rec in self.tower],
            "pullback": self.pullback,
            "extensions": self.extensions,
            "checks": self.matrix,
            "notices": self.notices,
            "all_passed": self.all_passed,
        }


# Every check identifier names the operation that decides it.
CHECKS = {
    "standard_conditions": "renormalization.verify_standard_conditions",
    "scaling_ratio_in_unit_interval": "real_bounds.scaling_ratio",
    "schwarzian_negative": "real_bounds.schwarzian_negativity",
    "hierarchy_nested": "real_bounds.interval_hierarchy",
    "poincare_growth": "pullback.fit_growth_constant",
    "linear_growth": "pullback.cycle_growth_ratios",
    "never_jump_itinerary": "pullback.never_jump_itinerary_check",
    "contraction": "polylike.construct_extension",
    "modulus_positive": "polylike.extension_modulus",
    "polylike_covering": "polylike.polylike_residual",
    "unbranched": "polylike.unbranched_check",
}


def new_bundle(cfg: RunConfig, tower: list[RenormLevel]) -> ReportBundle:
    b = ReportBundle(cfg.cache_key(), [level_record(lv) for lv in tower])
    for lv in tower:
        b.mark("standard_conditions", lv.k, all(r.passed for r in verify_standard_conditions(lv)))
    return b


def add_bounds(bundle: ReportBundle, tower: list[RenormLevel], cfg: RunConfig) -> None:
    rep = real_bounds.bounds_report(tower, cfg.bounds_grid, cfg.postcritical_points)
    bundle.bounds = rep.table()
    deep = [lv for lv in tower if lv.k >= DEEP_LEVEL]
    if not deep:
        bundle.notices.append(f"depth {len(tower)} is below {DEEP_LEVEL}: deep-level suites skipped")
    for lv in tower:
        ratio = rep.get(lv.k, lv.p.index, "scaling_ratio")
        if ratio is not None:
            bundle.mark("scaling_ratio_in_unit_interval", lv.k, 0.0 < ratio < 1.0)
    for lv in deep:
        q = lv.p.index
        bundle.mark("schwarzian_negative", lv.k, rep.get(lv.k, q, "schwarzian_max", 0.0) < 0.0)
        margins = [rep.get(lv.k, q, f"margin_{n}") for n in ("q0_in_s_left", "q0_in_s_right", "l_in_t_left", "l_in_t_right")]
        if None not in margins:
            bundle.mark("hierarchy_nested", lv.k, min(margins) > 0.0)


def add_complex_bounds(bundle: ReportBundle, tower: list[RenormLevel], cfg: RunConfig) -> dict:
    """Pullback constants and extensions at levels >= 3; returns the extensions."""
    deep = [lv for lv in tower if lv.k >= DEEP_LEVEL]
    if not deep:
        raise InsufficientDepth(f"complex bounds need tower depth >= {DEEP_LEVEL}, have {len(tower)}")
    exts = {}
    for lv in deep:
        pc = pullback_constants(lv, cfg.samples, cfg.chains, cfg.eps, cfg.seed)
        bundle.pullback[lv.k] = pc
        bundle.mark("poincare_growth", lv.k, math.isfinite(pc["poincare_K_fit"]))
        bundle.mark("linear_growth", lv.k, pc["linear_growth_C"] <= 100.0)
        bundle.mark("never_jump_itinerary", lv.k, pc["never_jump_passed"] == pc["never_jump_tested"])
        ext = polylike.construct_extension(
            tower, lv.k, n_boundary_points=cfg.n_boundary, grid=cfg.modulus_grid, n_grid=cfg.julia_grid, seed=cfg.seed
        )
        exts[lv.k] = ext
        bundle.extensions[lv.k] = ext.summary()
        bundle.mark("contraction", lv.k, ext.contraction <= polylike.CONTRACTION)
        bundle.mark("modulus_positive", lv.k, ext.modulus_lower_bound > 0.0)
        bundle.mark("polylike_covering", lv.k, ext.polylike_residual <= 10 * polylike.POLYLIKE_TOL)
        bundle.mark("unbranched", lv.k, ext.unbranched_flag)
    return exts


# ---------------------------------------------------------------------- writers
def write_outputs(bundle: ReportBundle, out: Path, exts: dict | None = None, bounds: bool = False,
                  tower: list[RenormLevel] | None = None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if tower is not None:
        files["tower.csv"] = csv_text(["k", "period", "P_a", "P_b", "length", "period_ratio"], tower_rows(tower))
    if bounds:
        files["bounds.csv"] = csv_text(["k", "q", "quantity", "value"], bundle.bounds)
    if bundle.pullback:
        rows = [(k, name, v) for k, d in sorted(bundle.pullback.items()) for name, v in sorted(d.items())]
        files["pullback.csv"] = csv_text(["k", "quantity", "value"], rows)
    if exts:
        keys = list(next(iter(bundle.extensions.values())))
        rows = [[bundle.extensions[k][n] for n in keys] for k in sorted(bundle.extensions)]
        files["extensions.csv"] = csv_text(keys, rows)
        for k, ext in sorted(exts.items()):
            files[f"polyline_U_k{k}.csv"] = _polyline_csv(ext.U.vertices)
            files[f"polyline_V_k{k}.csv"] = _polyline_csv(ext.boundary)
    files["summary.json"] = dumps(bundle.summary())
    paths = []
    for name in sorted(files):
        p = out / name
        p.write_text(files[name])
        paths.append(p)
    return paths


def _polyline_csv(z: np.ndarray) -> str:
    return csv_text(["index", "re", "im"], [(i, v.real, v.imag) for i, v in enumerate(z)])
