"""Fit kappa' from the distances nodes travel to reach their highway.

For each n, simulates networks and reports the median and maximum entry
distance (length units) divided by ln n.  The scale-sweep config uses
``kappa_prime = 0.5``, between the median ratio (about 0.36) and the
maximum ratio (about 0.55 to 0.62).

Usage: python3 scripts/fit_kappa_prime.py [--seeds 5] [--n 1024 4096 16384]
"""
import argparse
import math

import numpy as np

from secnet.routing import ScaleConfig, simulate_network


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="*", default=[2**10, 2**12, 2**14])
    ap.add_argument("--seeds", type=int, default=5)
    a = ap.parse_args()
    cfg = ScaleConfig()
    ratios = []
    for n in a.n:
        dist = []
        for s in range(a.seeds):
            run = simulate_network(n, s, cfg)
            d = np.concatenate([run.plan.access_dist, run.plan.delivery_dist])
            dist.append(d[d >= 0] * run.grid.cell_size)
        d = np.concatenate(dist) if dist else np.empty(0)
        if not d.size:
            print(f"n={n:6d}  no highways")
            continue
        ln = math.log(n)
        ratios.append(np.median(d) / ln)
        print(f"n={n:6d}  median/ln n={np.median(d) / ln:.3f}  max/ln n={d.max() / ln:.3f}")
    if ratios:
        print(f"median ratio over n = {np.median(ratios):.3f}")


if __name__ == "__main__":
    main()
