"""Calibrate the crossing constant delta on independent lattices.

Prints the largest delta with N_m >= delta ln m on every calibration lattice,
followed by the pass fraction at larger m on disjoint streams.

Usage: python3 scripts/calibrate_delta.py [--p-prime 0.95] [--kappa 2] [--m 32] [--seeds 200]
"""
import argparse
import math

import numpy as np

from secnet.percolation import calibrate_delta, min_crossings
from secnet.rng import derive_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p-prime", type=float, default=0.95)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--m", type=int, default=32)
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--check-m", type=int, nargs="*", default=[64, 128, 256])
    ap.add_argument("--check-seeds", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    delta = calibrate_delta(a.p_prime, a.kappa, a.m, a.seeds, a.seed)
    print(f"delta = {delta:.6f}")
    for m in a.check_m:
        counts = [min_crossings(m, a.p_prime, a.kappa, derive_seed(a.seed, 0, m, k)) for k in range(a.check_seeds)]
        frac = np.mean(np.asarray(counts) >= delta * math.log(m))
        print(f"m={m:4d}  min N_m={min(counts):3d}  threshold={delta * math.log(m):.3f}  pass={frac:.3f}")


if __name__ == "__main__":
    main()
