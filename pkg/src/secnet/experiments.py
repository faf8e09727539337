"""Experiment drivers behind the command-line subcommands.

Every driver takes a validated :class:`~secnet.config.ExperimentConfig` and a
thread count and returns ``(rows, summary)``: CSV rows and a JSON-ready
summary holding an ``acceptance`` block of named pass/fail verdicts.
Trials draw from per-trial substreams, so the thread count changes only the
wall time.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ergodic as erg
from .config import ExperimentConfig
from .percolation import calibrate_delta, min_crossings
from .rates import (
    PathLossParams,
    access_conditions,
    access_zone_schedule,
    colluding_rate_per_hop,
    collusion_snr_upper,
    highway_zone_schedule,
    secure_rate_per_hop,
)
from .rng import derive_seed, substream
from .routing import simulate_network
from .wiretap import HopChannel, leakage_vs_blocklength


def _pmap(fn, tasks, threads: int):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _verdict(ok: bool, **detail) -> dict:
    return {"pass": bool(ok), **detail}


def run_percolate(cfg: ExperimentConfig, threads: int = 1):
    p = cfg.params
    delta = p.delta
    if delta is None:
        delta = calibrate_delta(p.p_prime, p.kappa, p.calibration_m, p.calibration_seeds, cfg.seed)
    tasks = [(m, k) for m in p.m for k in range(cfg.seeds)]

    def one(t):
        m, k = t
        return min_crossings(m, p.p_prime, p.kappa, derive_seed(cfg.seed, 0, m, k))

    counts = _pmap(one, tasks, threads)
    rows, frac = [], {}
    for (m, k), nm in zip(tasks, counts):
        thr = delta * math.log(m)
        rows.append({"m": m, "seed": k, "n_min": nm, "threshold": thr, "pass": int(nm >= thr)})
    for m in p.m:
        ok = [r["pass"] for r in rows if r["m"] == m]
        frac[m] = sum(ok) / len(ok)
    ms = sorted(frac)
    mono = all(frac[b] >= frac[a] for a, b in zip(ms, ms[1:]))
    summary = {
        "delta": delta,
        "pass_fraction": {str(m): frac[m] for m in ms},
        "acceptance": {
            "crossing_law": _verdict(mono and frac[ms[-1]] >= 0.95, monotone=mono, top=frac[ms[-1]])
        },
    }
    return rows, summary


def run_scale_sweep(cfg: ExperimentConfig, threads: int = 1):
    sc = cfg.params
    lam = cfg.lambda_fn()
    tasks = [(n, k) for n in cfg.n for k in range(cfg.seeds)]

    def one(t):
        n, k = t
        r = simulate_network(n, derive_seed(cfg.seed, k), sc, lambda_e=lam).report
        routed = r.routed
        return {
            "n": n,
            "seed": k,
            "F": r.F,
            "F_zone": r.components["zone"],
            "F_deficit": r.components["deficit"],
            "F_distance": r.components["distance"],
            "zone_bound": r.components["zone_bound"],
            "median_rate": r.median_rate,
            "routed": int(routed.sum()),
            "highway_bottleneck": int(np.isin(r.bottleneck[routed], (1, 2)).sum()),
        }

    rows = _pmap(one, tasks, threads)
    per_n = {}
    for n in cfg.n:
        rs = [r for r in rows if r["n"] == n]
        routed = sum(r["routed"] for r in rs)
        per_n[n] = {
            "F": float(np.mean([r["F"] for r in rs])),
            "F_zone": float(np.mean([r["F_zone"] for r in rs])),
            "F_deficit": float(np.mean([r["F_deficit"] for r in rs])),
            "F_distance": float(np.mean([r["F_distance"] for r in rs])),
            "median_rate_sqrt_n": float(np.median([r["median_rate"] for r in rs])) * math.sqrt(n),
            "highway_bottleneck_fraction": sum(r["highway_bottleneck"] for r in rs) / routed if routed else 0.0,
            "zone_within_bound": float(np.mean([r["F_zone"] <= r["zone_bound"] for r in rs])),
        }
    ns = sorted(per_n)
    scaled = [per_n[n]["median_rate_sqrt_n"] for n in ns]
    band = max(scaled) / min(scaled) if min(scaled) > 0 else math.inf
    Fs = [per_n[n]["F"] for n in ns]
    summary = {
        "per_n": {str(n): v for n, v in per_n.items()},
        "acceptance": {
            "rate_band": _verdict(band <= 2.0, ratio=band),
            "blocked_fraction": _verdict(
                all(b < a for a, b in zip(Fs, Fs[1:])) and Fs[-1] < 0.1, F=Fs
            ),
            "highway_bottleneck": _verdict(
                per_n[ns[-1]]["highway_bottleneck_fraction"] >= 0.9,
                fraction=per_n[ns[-1]]["highway_bottleneck_fraction"],
            ),
        },
    }
    return rows, summary


def run_collusion_sweep(cfg: ExperimentConfig, threads: int = 1):
    p = cfg.params
    lam = cfg.lambda_fn() or (lambda n: p.lambda_bar * math.log(n) ** -2)
    rows = []
    for n in cfg.n:
        z = highway_zone_schedule(n, p.lambda_bar, p.delta, p.c, p.d, p.alpha, p.epsilon)
        hop = PathLossParams(p.alpha, p.P, p.N0, p.c, p.d, p.f_t, z.f[0])
        le = lam(n)
        rows.append(
            {
                "n": n,
                "levels": z.levels,
                "lambda_e": le,
                "snr_bound": collusion_snr_upper(hop, z, le),
                "colluding_rate": colluding_rate_per_hop(hop, z, le).rate_bits,
                "single_rate": secure_rate_per_hop(hop).rate_bits,
            }
        )
    snr = [r["snr_bound"] for r in rows]
    dec = all(b < a for a, b in zip(snr, snr[1:]))
    ratio = rows[-1]["colluding_rate"] / rows[-1]["single_rate"] if rows[-1]["single_rate"] > 0 else 0.0
    access = access_conditions([2.0**e for e in range(10, 31)], p.rho, p.access_alpha, p.r, p.kappa2)
    access_zone_schedule(cfg.n[-1], p.rho, p.access_alpha, p.r, kappa2=p.kappa2)
    summary = {
        "access_conditions": access,
        "acceptance": {"collusion_bound": _verdict(dec and ratio > 0.9, decreasing=dec, ratio=ratio)},
    }
    return rows, summary


def _alignment(seed: int, n: int = 2, T: int = 50_000, quant=erg.QuantScheme()) -> dict:
    gains = erg.sample_fading(erg.FadingModel(), (T, n, n), seed, 11)
    pairing = erg.quantize_and_pair(gains, quant)
    X = np.exp(2j * np.pi * substream(seed, 12).random((len(pairing.pairs), n)))
    return {
        "pairs": len(pairing.pairs),
        "discard_fraction": pairing.discard_fraction,
        "quantized": erg.aligned_channel_check(gains, pairing.pairs, X, quant),
        "raw": erg.aligned_channel_check(gains, pairing.pairs, X),
        "raw_bound": 2 * quant.gamma * (n - 1) * float(np.max(np.abs(X))),
    }


def run_ergodic_sweep(cfg: ExperimentConfig, threads: int = 1):
    p = cfg.params
    model = erg.FadingModel()
    rows, fits = [], {}
    combos = [tuple(c) for c in p.dof_cases]

    def fit(t):
        n, k = t
        return erg.fit_dof(n, p.snr_db, k=k, samples=p.samples, seed=derive_seed(cfg.seed, n, k), model=model)

    results = _pmap(fit, combos, threads)
    for (n, k), f in zip(combos, results):
        fits[f"n={n},k={k}"] = {"slope": f.slope, "target": erg.dof_target(n, k), "residual": f.residual}
        for db, r in zip(sorted(p.snr_db), f.rates):
            rows.append({"n": n, "n_e": k, "k": k, "snr_db": db, "rate": r, "stderr": float("nan"),
                         "eve_term": float("nan"), "bound": float("nan")})
    jensen = []
    for n in p.jensen_n:
        for snr in p.jensen_snr:
            c = erg.ErgodicConfig(n=n, n_e=1, snr=snr, samples=p.samples, seed=derive_seed(cfg.seed, 7, n))
            e, se = erg.eve_term(c, model, 1)
            b = erg.jensen_bound(n, snr, model)
            jensen.append(e <= b + 3 * se)
            rows.append({"n": n, "n_e": 1, "k": 1, "snr_db": 10 * math.log10(snr), "rate": float("nan"),
                         "stderr": se, "eve_term": e, "bound": b})
    dof_ok = all(abs(v["slope"] - v["target"]) <= 0.05 for v in fits.values())
    align = _alignment(cfg.seed)
    summary = {
        "dof": fits,
        "alignment": align,
        "acceptance": {
            "secure_dof": _verdict(dof_ok),
            "jensen_bound": _verdict(all(jensen)),
            "alignment": _verdict(align["quantized"] == 0.0 and align["raw"] <= align["raw_bound"]),
        },
    }
    return rows, summary


def run_wiretap_demo(cfg: ExperimentConfig, threads: int = 1):
    p = cfg.params
    ch = HopChannel.bsc(p.crossover)
    rows = leakage_vs_blocklength(ch, p.H, list(p.N), cfg.seeds, R=p.R, master_seed=cfg.seed)

    def col(mode):
        return [r["mean"] for r in rows if r["mode"] == mode]

    ind, shared, none = col("independent"), col("shared"), col("none")
    summary = {
        "capacity_e": ch.eve_capacity,
        "acceptance": {
            "leakage_non_increasing": _verdict(all(b <= a for a, b in zip(ind, ind[1:])), means=ind),
            "randomization_helps": _verdict(all(a < b for a, b in zip(ind, none))),
            "shared_index_worse": _verdict(all(s > a for a, s in zip(ind, shared))),
        },
    }
    return rows, summary


DRIVERS = {
    "percolate": run_percolate,
    "scale-sweep": run_scale_sweep,
    "collusion-sweep": run_collusion_sweep,
    "ergodic-sweep": run_ergodic_sweep,
    "wiretap-demo": run_wiretap_demo,
}
