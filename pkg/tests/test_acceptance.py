"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

The lines are collected in ``VERDICTS`` and repeated in the terminal summary
(see ``conftest.py``), so ``pytest -v`` output always carries the full table.
Runtime limits are part of each criterion and are asserted too.
"""
import math
import time

import numpy as np
import pytest

from secnet.ergodic import (
    ErgodicConfig,
    FadingModel,
    QuantScheme,
    aligned_channel_check,
    dof_target,
    eve_term,
    fit_dof,
    jensen_bound,
    quantize_and_pair,
    sample_fading,
)
from secnet.geom import Grid, PointSet, Region, sample_ppp
from secnet.percolation import calibrate_delta, mark_open, min_crossings
from secnet.rates import (
    PathLossParams,
    colluding_rate_per_hop,
    collusion_snr_upper,
    highway_zone_schedule,
    secure_rate_per_hop,
    series_S,
)
from secnet.rng import derive_seed
from secnet.routing import ScaleConfig, blocked_fraction, simulate_network
from secnet.wiretap import HopChannel, leakage_vs_blocklength

VERDICTS: list[str] = []


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}"
    VERDICTS.append(line)
    print(line)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# -- 1 crossing law -------------------------------------------------------------


def test_criterion_1_crossing_law():
    p_prime, kappa, ms = 0.95, 2.0, (32, 64, 128, 256)
    assert kappa * math.log(6 * (1 - p_prime)) < -2
    with Timer() as t:
        delta = calibrate_delta(p_prime, kappa, 32, 200, 0)
        frac = {
            m: np.mean([min_crossings(m, p_prime, kappa, derive_seed(0, 0, m, k)) >= delta * math.log(m) for k in range(100)])
            for m in ms
        }
    mono = all(frac[b] >= frac[a] for a, b in zip(ms, ms[1:]))
    ok = mono and frac[256] >= 0.95 and t.elapsed <= 120
    verdict("1", ok, f"delta={delta:.4f} pass fractions {[float(frac[m]) for m in ms]} ({t.elapsed:.1f}s)")
    assert ok


# -- 2 throughput scaling --------------------------------------------------------


@pytest.fixture(scope="module")
def scale_runs():
    ns = (2**10, 2**12, 2**14)
    lam = lambda n: math.log(n) ** -3  # noqa: E731
    with Timer() as t:
        runs = {n: [simulate_network(n, derive_seed(0, k), ScaleConfig(), lambda_e=lam).report for k in range(20)] for n in ns}
    return runs, t.elapsed


def test_criterion_2a_rate_scaling(scale_runs):
    runs, elapsed = scale_runs
    scaled = {n: float(np.median([r.median_rate for r in reps])) * math.sqrt(n) for n, reps in runs.items()}
    ratio = max(scaled.values()) / min(scaled.values())
    ok = ratio <= 2.0 and elapsed <= 600
    verdict("2a", ok, f"median rate*sqrt(n) max/min = {ratio:.3f} ({elapsed:.1f}s)")
    assert ok


def test_criterion_2b_blocked_fraction(scale_runs):
    runs, _ = scale_runs
    ns = sorted(runs)
    F = [float(np.mean([r.F for r in runs[n]])) for n in ns]
    ok = all(b < a for a, b in zip(F, F[1:])) and F[-1] < 0.1
    verdict("2b", ok, f"mean F = {[round(x, 4) for x in F]} (need strictly decreasing, < 0.1 at 2^14)")
    assert ok


def test_criterion_2c_highway_bottleneck(scale_runs):
    runs, _ = scale_runs
    reps = runs[2**14]
    routed = sum(int(r.routed.sum()) for r in reps)
    hw = sum(int(np.isin(r.bottleneck[r.routed], (1, 2)).sum()) for r in reps)
    frac = hw / routed if routed else 0.0
    ok = frac >= 0.9
    verdict("2c", ok, f"highway-bottleneck fraction at 2^14 = {frac:.3f} over {routed} routed nodes")
    assert ok


# -- 3 zone geometry -------------------------------------------------------------


def test_criterion_3_zone_geometry():
    with Timer() as t:
        grid = Grid.for_region(Region.extended(400), 1.0)
        k = grid.shape[0]
        ij = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), -1).reshape(-1, 2)
        legit = PointSet(grid.cell_centers(ij), 1.0, 0, grid.side_length)
        eaves = PointSet(np.array([[10.5, 9.5]]), 1.0, 0, grid.side_length)
        om = mark_open(grid, legit, eaves, 2.0, 1)
        closed = int((~om.open).sum())
    ok = closed == 25 and t.elapsed < 1.0
    verdict("3", ok, f"{closed} closed cells ({t.elapsed * 1000:.1f} ms)")
    assert ok


# -- 4 series oracle -------------------------------------------------------------


def _brute_S(alpha, terms=10**7):
    """Partial sum of 10^7 terms plus the exact integral of the tail from y = terms (midpoint rule)."""
    parts = []
    for lo in range(1, terms + 1, 10**6):
        i = np.arange(lo, min(lo + 10**6, terms + 1), dtype=np.float64)
        parts.append(math.fsum((i * (i - 0.5) ** -alpha).tolist()))
    y = float(terms)
    tail = y ** (2 - alpha) / (alpha - 2) + 0.5 * y ** (1 - alpha) / (alpha - 1)
    return math.fsum(parts) + tail


def test_criterion_4_series_oracle():
    with Timer() as t:
        errs = {a: abs(series_S(a, 1e-10) - _brute_S(a)) for a in (2.5, 3.0, 4.0)}
    ok = all(e <= 1e-8 for e in errs.values()) and t.elapsed < 30
    verdict("4", ok, f"max |S - oracle| = {max(errs.values()):.2e} ({t.elapsed:.1f}s)")
    assert ok


# -- 5 blocked-fraction bound ----------------------------------------------------


def test_criterion_5_blocked_bound():
    cfg = ScaleConfig()
    frac = {}
    with Timer() as t:
        for n in (2**10, 2**12, 2**14):
            region = Region.extended(n)
            p = cfg.access_params(n)
            lam = math.log(n) ** -3
            hits = []
            for k in range(100):
                legit = sample_ppp(region, 1.0, derive_seed(5, n, k, 0))
                eaves = sample_ppp(region, lam, derive_seed(5, n, k, 1))
                rep = blocked_fraction(legit, eaves, p, p.d, epsilon=0.1)
                hits.append(rep.F <= rep.bound)
            frac[n] = float(np.mean(hits))
    ok = all(v >= 0.95 for v in frac.values()) and t.elapsed <= 300
    verdict("5", ok, f"fraction of seeds within bound {frac} ({t.elapsed:.1f}s)")
    assert ok


# -- 6 collusion bound -------------------------------------------------------------


def test_criterion_6_collusion():
    alpha, lam_bar, delta, c, d, f_t = 2.5, 0.01, 0.1, 1.0, 1, 8.0
    with Timer() as t:
        snr, ratio = [], None
        for e in range(10, 21):
            n = 2.0**e
            z = highway_zone_schedule(n, lam_bar, delta, c, d, alpha)
            hop = PathLossParams(alpha, 1.0, 1.0, c, d, f_t, z.f[0])
            lam = lam_bar * math.log(n) ** -2
            snr.append(collusion_snr_upper(hop, z, lam))
            if e == 20:
                ratio = colluding_rate_per_hop(hop, z, lam).rate_bits / secure_rate_per_hop(hop).rate_bits
    dec = all(b < a for a, b in zip(snr, snr[1:]))
    ok = dec and ratio > 0.9 and t.elapsed < 10
    verdict("6", ok, f"bound strictly decreasing={dec}, colluding/single rate at 2^20 = {ratio:.4f}")
    assert ok


# -- 7 multi-hop leakage -------------------------------------------------------------


@pytest.fixture(scope="module")
def leakage_rows():
    with Timer() as t:
        rows = leakage_vs_blocklength(HopChannel.bsc(0.3), 3, [2, 4, 6], 100, R=0.5)
    return {(r["mode"], r["N"]): r["mean"] for r in rows}, t.elapsed


def test_criterion_7a_leakage_non_increasing(leakage_rows):
    rows, elapsed = leakage_rows
    vals = [rows[("independent", N)] for N in (2, 4, 6)]
    ok = all(b <= a for a, b in zip(vals, vals[1:])) and elapsed <= 300
    verdict("7a", ok, f"per-bit leakage at Rx=C_e for N=2,4,6: {[round(v, 4) for v in vals]}")
    assert ok


def test_criterion_7b_randomization_helps(leakage_rows):
    rows, _ = leakage_rows
    pairs = [(rows[("independent", N)], rows[("none", N)]) for N in (2, 4, 6)]
    ok = all(a < b for a, b in pairs)
    verdict("7b", ok, f"(randomized, none) = {[(round(a, 4), round(b, 4)) for a, b in pairs]}")
    assert ok


def test_criterion_7c_shared_index_worse(leakage_rows):
    rows, _ = leakage_rows
    pairs = [(rows[("shared", N)], rows[("independent", N)]) for N in (2, 4, 6)]
    ok = all(s > a for s, a in pairs)
    verdict("7c", ok, f"(shared, independent) = {[(round(s, 4), round(a, 4)) for s, a in pairs]}")
    assert ok


# -- 8 secure DoF -------------------------------------------------------------------


def test_criterion_8_secure_dof():
    snr_db = [20, 30, 40, 50, 60]
    with Timer() as t:
        fits = {(n, k): fit_dof(n, snr_db, k=k, samples=100_000, seed=derive_seed(0, n, k)) for n, k in ((4, 1), (8, 2))}
    errs = {key: abs(f.slope - dof_target(*key)) for key, f in fits.items()}
    ok = all(e <= 0.05 for e in errs.values()) and t.elapsed <= 300
    slopes = {f"n={n},k={k}": round(f.slope, 4) for (n, k), f in fits.items()}
    verdict("8", ok, f"slopes {slopes}, target 0.25 ({t.elapsed:.1f}s)")
    assert ok


# -- 9 Jensen bound -----------------------------------------------------------------


def test_criterion_9_jensen():
    model = FadingModel()
    worst = -math.inf
    with Timer() as t:
        ok = True
        for n in (2, 4, 8):
            for snr in (1.0, 10.0, 100.0):
                e, se = eve_term(ErgodicConfig(n=n, snr=snr, samples=100_000, seed=derive_seed(9, n)), model)
                b = jensen_bound(n, snr, model)
                ok &= e <= b + 3 * se
                worst = max(worst, (e - b) / se)
    ok = ok and t.elapsed <= 120
    verdict("9", ok, f"max (eve - bound)/stderr = {worst:.2f} ({t.elapsed:.1f}s)")
    assert ok


# -- 10 alignment cancellation -------------------------------------------------------


def test_criterion_10_alignment():
    with Timer() as t:
        details, ok = [], True
        for n, q in ((2, QuantScheme(1.0, 1.5)), (2, QuantScheme(0.5, 2.0)), (3, QuantScheme(1.0, 1.5))):
            gains = sample_fading(FadingModel(), (50_000, n, n), derive_seed(10, n), 0)
            pairing = quantize_and_pair(gains, q)
            X = np.exp(2j * np.pi * np.random.default_rng(n).random((len(pairing.pairs), n)))
            quant = aligned_channel_check(gains, pairing.pairs, X, q)
            raw = aligned_channel_check(gains, pairing.pairs, X)
            bound = 2 * q.gamma * (n - 1) * float(np.abs(X).max())
            ok &= len(pairing.pairs) > 0 and quant == 0.0 and raw <= bound
            details.append(f"n={n} gamma={q.gamma}: pairs={len(pairing.pairs)} quantized={quant} raw={raw:.3f}<={bound:.3f}")
    ok = ok and t.elapsed < 10
    verdict("10", ok, "; ".join(details))
    assert ok
