"""Run every shipped experiment config through the CLI and print the verdicts.

Usage: python3 scripts/run_all.py [--out results] [--threads 4]
"""
import argparse
from pathlib import Path

from secnet.cli import main as cli_main
from secnet.config import KINDS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    status = 0
    for kind in KINDS:
        print(f"== {kind}")
        argv = [kind, "--config", str(CONFIGS / f"{kind}.yaml"), "--out", str(a.out / kind), "--threads", str(a.threads)]
        status |= cli_main(argv)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
