import csv
import json
from pathlib import Path

import pytest

from renormlab import cli, polylike, report
from renormlab.errors import ConfigError, ContractionUnattainable

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FEIGENBAUM = str(CONFIGS / "feigenbaum.toml")


def run(*argv):
    return cli.main([str(a) for a in argv])


def _read(out: Path) -> dict:
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file() and "cache" not in p.parts}


def test_tower_command(tmp_path, capsys):
    assert run("tower", "--config", FEIGENBAUM, "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "tower.csv").open()))
    assert [int(r["period"]) for r in rows] == [2, 4, 8, 16, 32, 64]
    assert "k,period" in capsys.readouterr().out


def test_not_renormalizable_exit(tmp_path):
    assert run("tower", "--config", CONFIGS / "chebyshev.toml", "--out", tmp_path) == 3


def test_malformed_config_exit(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[map]\npolynomial = [1, 0, 1\n")
    assert run("tower", "--config", bad, "--out", tmp_path) == 2
    bad.write_text("[map]\npolynomial = [0.0, 0.0, 1.0]\ninterval = [-1, 1]\n[run]\ndepth = 'deep'\n")
    assert run("tower", "--config", bad, "--out", tmp_path) == 2
    with pytest.raises(SystemExit) as exc:
        run("tower")
    assert exc.value.code == 2


def test_tolerances_fixed():
    with pytest.raises(ConfigError):
        report.load_config("[map]\npolynomial = [-1.0, 0.0, 1.0]\ninterval = [-1.7, 1.7]\n[run.tolerances]\ntau_root = 1e-6\n")


def test_cache_only_missing(tmp_path):
    assert run("tower", "--config", FEIGENBAUM, "--out", tmp_path, "--cache-only") == 4


def test_complex_bounds_needs_depth(tmp_path):
    assert run("complex-bounds", "--config", CONFIGS / "basilica.toml", "--out", tmp_path) == 4
    assert run("complex-bounds", "--config", FEIGENBAUM, "--depth", 2, "--out", tmp_path) == 4


def test_shallow_bounds_notice(tmp_path, capsys):
    assert run("bounds", "--config", FEIGENBAUM, "--depth", 2, "--out", tmp_path) == 0
    assert "deep-level suites skipped" in capsys.readouterr().out
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["notices"]


def test_bounds_scaling_ratio_and_determinism(tmp_path):
    cold, warm, plain = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run("bounds", "--config", FEIGENBAUM, "--out", cold) == 0
    (warm / "cache").mkdir(parents=True)
    for p in (cold / "cache").iterdir():
        (warm / "cache" / p.name).write_bytes(p.read_bytes())
    assert run("bounds", "--config", FEIGENBAUM, "--out", warm, "--cache-only") == 0
    assert run("bounds", "--config", FEIGENBAUM, "--out", plain, "--no-cache") == 0
    assert _read(cold) == _read(warm) == _read(plain)
    assert not (plain / "cache").exists()
    rows = list(csv.DictReader((cold / "bounds.csv").open()))
    ratio = {int(r["k"]): float(r["value"]) for r in rows if r["quantity"] == "scaling_ratio"}
    assert sorted(ratio) == [1, 2, 3, 4, 5]
    assert abs(ratio[5] - 0.3995) <= 0.005


def test_complex_bounds_and_refine(tmp_path):
    base, fine = tmp_path / "base", tmp_path / "fine"
    assert run("complex-bounds", "--config", FEIGENBAUM, "--depth", 4, "--out", base) == 0
    assert run("complex-bounds", "--config", FEIGENBAUM, "--depth", 4, "--out", fine, "--refine") == 0
    for k in (3, 4):
        assert (base / f"polyline_U_k{k}.csv").exists() and (base / f"polyline_V_k{k}.csv").exists()

    def moduli(out):
        return {int(r["k"]): float(r["modulus_lower_bound"]) for r in csv.DictReader((out / "extensions.csv").open())}

    a, b = moduli(base), moduli(fine)
    assert min(a.values()) > 0
    assert all(abs(a[k] - b[k]) / a[k] < 0.1 for k in a)


def test_contraction_unattainable_exit(tmp_path, monkeypatch):
    def refuse(*args, **kwargs):
        raise ContractionUnattainable("forced", 0.5, 1e3)

    monkeypatch.setattr(polylike, "construct_extension", refuse)
    assert run("complex-bounds", "--config", FEIGENBAUM, "--depth", 3, "--out", tmp_path) == 5
