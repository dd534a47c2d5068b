"""Command-line front end: ``renormlab {tower,bounds,complex-bounds,report}``.

Exit codes: 0 success, 1 a deep-level check failed, 2 configuration
error, 3 the map is not renormalizable, 4 missing cache or insufficient
depth, 5 the contraction condition could not be met.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report
from .errors import CacheMissing, ConfigError, ContractionUnattainable, InsufficientDepth

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NOT_RENORMALIZABLE, EXIT_DEPTH, EXIT_CONTRACTION = range(6)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="renormlab", description="Renormalization towers and their real and complex bounds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("tower", "bounds", "complex-bounds", "report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML file with [map] and optional [run] tables")
        sp.add_argument("--depth", type=int, help="number of tower levels")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--refine", action="store_true", help="double boundary points and Julia grid")
        sp.add_argument("--no-cache", action="store_true", help="neither read nor write the tower cache")
        sp.add_argument("--cache-only", action="store_true", help="fail instead of computing a missing tower")
    return parser


def _tower(cfg: report.RunConfig, args) -> list:
    tower = report.obtain_tower(cfg, compute=not args.cache_only)
    if not tower:
        raise _NotRenormalizable()
    return tower


class _NotRenormalizable(Exception):
    pass


def _print_tower(tower) -> None:
    print("k,period,length,period_ratio")
    for k, n, _, _, length, ratio in report.tower_rows(tower):
        print(f"{k},{n},{report.fmt(length)},{report.fmt(ratio)}")


def cmd_tower(cfg, args) -> int:
    tower = _tower(cfg, args)
    bundle = report.new_bundle(cfg, tower)
    if len(tower) < cfg.depth:
        bundle.notices.append(f"renormalizable to depth {len(tower)} of {cfg.depth}")
    report.write_outputs(bundle, Path(cfg.out), tower=tower)
    _print_tower(tower)
    return EXIT_OK


def cmd_bounds(cfg, args) -> int:
    tower = _tower(cfg, args)
    bundle = report.new_bundle(cfg, tower)
    report.add_bounds(bundle, tower, cfg)
    report.write_outputs(bundle, Path(cfg.out), bounds=True, tower=tower)
    for note in bundle.notices:
        print(note)
    return EXIT_OK if bundle.all_passed else EXIT_CHECKS


def cmd_complex_bounds(cfg, args) -> int:
    tower = _tower(cfg, args)
    bundle = report.new_bundle(cfg, tower)
    exts = report.add_complex_bounds(bundle, tower, cfg)
    report.write_outputs(bundle, Path(cfg.out), exts=exts, tower=tower)
    print("k,disk_scale,modulus_lower_bound,diam_ratio,julia_angle,unbranched")
    for k, e in sorted(exts.items()):
        print(f"{k},{report.fmt(e.disk_scale)},{report.fmt(e.modulus_lower_bound)},{report.fmt(e.diam_ratio)},"
              f"{report.fmt(e.julia_angle)},{report.fmt(e.unbranched_flag)}")
    floor = min(e.modulus_lower_bound for e in exts.values())
    return EXIT_OK if floor > 0 else EXIT_CHECKS


def cmd_report(cfg, args) -> int:
    tower = _tower(cfg, args)
    bundle = report.new_bundle(cfg, tower)
    report.add_bounds(bundle, tower, cfg)
    exts = report.add_complex_bounds(bundle, tower, cfg)
    report.write_outputs(bundle, Path(cfg.out), exts=exts, bounds=True, tower=tower)
    for check, levels in sorted(bundle.matrix.items()):
        marks = " ".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in sorted(levels.items()))
        print(f"{check:32s} {marks}")
    return EXIT_OK if bundle.all_passed else EXIT_CHECKS


COMMANDS = {"tower": cmd_tower, "bounds": cmd_bounds, "complex-bounds": cmd_complex_bounds, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = report.load_config(args.config, depth=args.depth, out=args.out)
        if args.no_cache:
            cfg.cache = False
        if args.refine:
            cfg = cfg.refined()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NotRenormalizable:
        print("NotRenormalizable: no restrictive interval around the selected critical point", file=sys.stderr)
        return EXIT_NOT_RENORMALIZABLE
    except (CacheMissing, InsufficientDepth) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEPTH
    except ContractionUnattainable as exc:
        print(f"ContractionUnattainable: {exc} (best factor {exc.best_factor:.6g} at scale {exc.best_scale:.6g})",
              file=sys.stderr)
        return EXIT_CONTRACTION


if __name__ == "__main__":
    raise SystemExit(main())
