"""Brute-force reference values for the interference series S(alpha).

Sums the first 10^7 terms directly and closes the tail with the midpoint
rule, sum_{i>M} f(i) ~ int_{M+1/2}^inf f, whose error is of order f'(M)/24
(below 1e-15 here).  The printed values are frozen into the test suite.
"""
import math
import sys

import numpy as np

M = 10**7


def tail(alpha: float) -> float:
    # antiderivative of x (x - 1/2)^-alpha with y = x - 1/2, evaluated at y = M
    y = float(M)
    return y ** (2 - alpha) / (alpha - 2) + 0.5 * y ** (1 - alpha) / (alpha - 1)


def brute(alpha: float) -> float:
    i = np.arange(1, M + 1, dtype=np.float64)
    head = math.fsum((i * (i - 0.5) ** (-alpha)).tolist())
    return head + tail(alpha)


if __name__ == "__main__":
    alphas = [float(a) for a in sys.argv[1:]] or [2.5, 3.0, 4.0]
    for a in alphas:
        print(f"{a!r}: {brute(a)!r}")
