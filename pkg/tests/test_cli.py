import csv
import json
import math
import os
from dataclasses import replace
from pathlib import Path

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from secnet import cli
from secnet.config import (
    ConfigError,
    ExpressionError,
    from_dict,
    is_little_o_ln2,
    load_config,
    parse_expression,
    validate,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _codes(cfg):
    return {d.code: d.message for d in validate(cfg)}


# -- expressions -------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, n, want",
    [
        ("(ln n)^-3", math.e**2, 2.0**-3),
        ("0.01*(ln n)^-2", math.e**3, 0.01 / 9),
        ("1/sqrt(n)", 16.0, 0.25),
        ("2", 10.0, 2.0),
        ("n^-0.5 * ln(n)", 100.0, math.log(100) / 10),
    ],
)
def test_expression_values(text, n, want):
    assert parse_expression(text)(n) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("text", ["__import__('os')", "n.real", "x + 1", "[n]", "open('f')", ""])
def test_expression_rejects_unsafe_input(text):
    with pytest.raises(ExpressionError):
        parse_expression(text)


def test_intensity_order_checks():
    grid = [2.0**e for e in (10, 12, 14)]
    assert is_little_o_ln2(parse_expression("(ln n)^-3"), grid)
    assert not is_little_o_ln2(parse_expression("(ln n)^-2"), grid)
    assert not is_little_o_ln2(parse_expression("0.001"), grid)


# -- validation ---------------------------------------------------------------------


def test_alpha_two_rejected():
    cfg = from_dict({"params": {"alpha": 2.0}}, "collusion-sweep")
    assert "path-loss exponent must exceed 2" in _codes(cfg)["alpha"]


def test_constant_intensity_rejected():
    cfg = from_dict({"lambda_e": "0.001"}, "scale-sweep")
    assert "intensity condition" in _codes(cfg)["intensity"]


def test_r_at_upper_end_rejected():
    cfg = from_dict({"params": {"rho": 1.0, "r": 0.5, "access_alpha": 4.0}}, "collusion-sweep")
    assert "open interval" in _codes(cfg)["r"]


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")))
def test_shipped_configs(path):
    cfg = load_config(path)
    diags = validate(cfg)
    assert bool(diags) == path.name.startswith("invalid")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        from_dict({"params": {"nonsense": 1}}, "wiretap-demo")
    with pytest.raises(ConfigError):
        from_dict({"sedes": 3}, "wiretap-demo")
    with pytest.raises(ConfigError):
        from_dict({"kind": "percolate"}, "wiretap-demo")


@given(st.integers(0, 2**31), st.integers(1, 50))
def test_hash_depends_on_content_only(seed, seeds):
    a = from_dict({"seed": seed, "seeds": seeds, "out": "x"}, "wiretap-demo")
    b = from_dict({"seed": seed, "seeds": seeds, "out": "y"}, "wiretap-demo")
    assert a.hash() == b.hash()
    assert replace(a, seed=seed + 1).hash() != a.hash()


# -- runs -----------------------------------------------------------------------------


def _small_scale(tmp_path, name="run"):
    cfg = from_dict({"n": [1024], "seeds": 1, "out": str(tmp_path / name)}, "scale-sweep")
    return cfg


def test_scale_sweep_one_row(tmp_path):
    cfg = _small_scale(tmp_path)
    m = cli.run(cfg)
    out = tmp_path / "run"
    lines = (out / "scale-sweep.csv").read_text().splitlines()
    assert lines[0] == f"# schema={cli.SCHEMA_VERSION} config_sha256={cfg.hash()}"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 1 and rows[0]["n"] == "1024"
    summary = json.loads((out / "scale-sweep.json").read_text())
    assert set(summary["acceptance"]) == {"rate_band", "blocked_fraction", "highway_bottleneck"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["output_hash"] == m.output_hash and manifest["seeds"] == [0]


def test_same_config_same_hash(tmp_path):
    cfg = from_dict({"seeds": 4, "params": {"N": [2, 4]}}, "wiretap-demo")
    a = cli.run(cfg, tmp_path / "a")
    b = cli.run(cfg, tmp_path / "b")
    assert a.output_hash == b.output_hash
    assert (tmp_path / "a" / "wiretap-demo.csv").read_bytes() == (tmp_path / "b" / "wiretap-demo.csv").read_bytes()


def test_threads_do_not_change_results(tmp_path):
    cfg = from_dict({"seeds": 6, "params": {"m": [32, 64], "delta": 0.5}}, "percolate")
    a = cli.run(cfg, tmp_path / "a", threads=1)
    b = cli.run(cfg, tmp_path / "b", threads=4)
    assert a.output_hash == b.output_hash


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SECNET_SEED", "17")
    assert cli.main(["collusion-sweep", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "collusion-sweep.json").read_text())
    assert summary["config"]["seed"] == 17


def test_main_prints_verdicts(tmp_path, capsys):
    assert cli.main(["collusion-sweep", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS  collusion-sweep:collusion_bound" in out


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"kind": "collusion-sweep", "params": {"alpha": 2.0}}))
    assert cli.main(["collusion-sweep", "--config", str(path), "--out", str(tmp_path / "o")]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err["diagnostics"][0]["code"] == "alpha"
    assert not (tmp_path / "o").exists()


def test_validate_subcommand(tmp_path, capsys):
    assert cli.main(["validate", "--config", str(CONFIGS / "invalid-alpha.yaml")]) == 1
    assert json.loads(capsys.readouterr().out)["diagnostics"]
    assert cli.main(["validate", "--config", str(CONFIGS / "wiretap-demo.yaml")]) == 0


def test_interrupted_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "data.csv"

    def boom(src, dst):
        raise KeyboardInterrupt

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(KeyboardInterrupt):
        cli.atomic_write(target, "a,b\n1,2\n")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces_whole_file(tmp_path):
    target = tmp_path / "x.json"
    cli.atomic_write(target, "old")
    cli.atomic_write(target, "new")
    assert target.read_text() == "new"


@pytest.mark.parametrize("kind", ["percolate", "scale-sweep", "collusion-sweep", "ergodic-sweep", "wiretap-demo"])
def test_every_kind_reports_verdicts(kind, tmp_path):
    small = {
        "percolate": {"seeds": 3, "params": {"m": [32], "delta": 0.5}},
        "scale-sweep": {"n": [1024], "seeds": 1},
        "collusion-sweep": {},
        "ergodic-sweep": {"params": {"samples": 2000, "jensen_n": [2], "jensen_snr": [1]}},
        "wiretap-demo": {"seeds": 2, "params": {"N": [2]}},
    }[kind]
    cli.run(from_dict(small, kind), tmp_path)
    summary = json.loads((tmp_path / f"{kind}.json").read_text())
    assert summary["acceptance"] and all(isinstance(v["pass"], bool) for v in summary["acceptance"].values())
