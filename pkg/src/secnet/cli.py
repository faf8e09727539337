"""Command-line harness: ``secnet <subcommand> --config PATH``.

Subcommands ``percolate``, ``scale-sweep``, ``collusion-sweep``,
``ergodic-sweep`` and ``wiretap-demo`` run an experiment and write
``<kind>.csv``, ``<kind>.json`` and ``manifest.json`` into ``--out``.
``validate`` only prints diagnostics.  Files are written to a temporary
name and renamed into place, so an interrupted run never leaves a partial
output at the final path.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .config import KINDS, ConfigError, ExperimentConfig, from_dict, load_config, validate
from .experiments import DRIVERS

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunManifest:
    config_hash: str
    output_hash: str
    wall_time: float
    seeds: list[int]
    kind: str
    files: list[str]


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def rows_to_csv(rows: list[dict], config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION} config_sha256={config_hash}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> RunManifest:
    """Validate and execute ``cfg``; return the manifest of the written outputs."""
    diags = validate(cfg)
    if diags:
        raise ConfigError(json.dumps([asdict(d) for d in diags]))
    out = Path(out_dir or cfg.out or "results")
    t0 = time.perf_counter()
    rows, summary = DRIVERS[cfg.kind](cfg, max(1, int(threads)))
    chash = cfg.hash()
    csv_text = rows_to_csv(rows, chash)
    summary = _json_safe({"kind": cfg.kind, "config_sha256": chash, "config": cfg.to_dict(), **summary})
    json_text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    ohash = hashlib.sha256((csv_text + "\0" + json_text).encode()).hexdigest()
    files = [f"{cfg.kind}.csv", f"{cfg.kind}.json"]
    atomic_write(out / files[0], csv_text)
    atomic_write(out / files[1], json_text)
    manifest = RunManifest(chash, ohash, time.perf_counter() - t0, list(range(cfg.seeds)), cfg.kind, files)
    atomic_write(out / "manifest.json", json.dumps(asdict(manifest), indent=2) + "\n")
    return manifest


def _apply_overrides(cfg: ExperimentConfig, seeds: int | None) -> ExperimentConfig:
    if seeds is not None:
        cfg = replace(cfg, seeds=int(seeds))
    env = os.environ.get("SECNET_SEED")
    if env:
        cfg = replace(cfg, seed=int(env, 0))
    return cfg


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secnet", description="Secure wireless network scaling experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in (*KINDS, "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--seeds", type=int, help="number of seeds (overrides the config)")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; affects wall time only")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    kind = None if args.command == "validate" else args.command
    try:
        cfg = load_config(args.config, kind) if args.config else from_dict({}, kind)
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    cfg = _apply_overrides(cfg, args.seeds)
    diags = validate(cfg)
    if args.command == "validate":
        print(json.dumps({"kind": cfg.kind, "diagnostics": [asdict(d) for d in diags]}, indent=2))
        return 1 if diags else 0
    if diags:
        print(json.dumps({"diagnostics": [asdict(d) for d in diags]}), file=sys.stderr)
        return 2
    manifest = run(cfg, args.out, args.threads)
    summary = json.loads((Path(args.out or cfg.out or "results") / f"{cfg.kind}.json").read_text())
    for name, v in summary["acceptance"].items():
        print(f"{'PASS' if v['pass'] else 'FAIL'}  {cfg.kind}:{name}")
    print(json.dumps({"config_hash": manifest.config_hash, "output_hash": manifest.output_hash}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
