"""Exactly enumerable multi-hop wiretap systems with random binning.

Each hop re-encodes the same message index ``w`` with its own binning
codebook: ``2^ceil(N R)`` bins of ``2^ceil(N Rx)`` codewords each, one
codeword drawn uniformly from bin ``w``.  The eavesdropper sees every hop
through a discrete memoryless channel, and :func:`exact_leakage` computes
``I(W; Y_e(1), ..., Y_e(H))`` by summing over every message, randomization
index and output sequence.

Discrete channels stand in for Gaussian hops: the binning argument does not
depend on the channel law, and only finite alphabets can be enumerated.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .rng import derive_seed, substream

MAX_CODEWORDS = 1 << 16
MAX_JOINT = 1 << 22


class EnumerationError(ValueError):
    """The requested instance is too large to enumerate."""


@dataclass(frozen=True, eq=False)
class HopChannel:
    legit: np.ndarray
    eve: np.ndarray

    def __post_init__(self):
        for name in ("legit", "eve"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim != 2 or np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-12, rtol=0):
                raise ValueError(f"{name} must be a row-stochastic matrix")
            object.__setattr__(self, name, m)
        if self.legit.shape[0] != self.eve.shape[0]:
            raise ValueError("legit and eve channels must share the input alphabet")

    @property
    def alphabet(self) -> int:
        return self.eve.shape[0]

    @property
    def eve_capacity(self) -> float:
        return channel_capacity(self.eve)

    @classmethod
    def bsc(cls, eve_crossover: float, legit_crossover: float = 0.0) -> "HopChannel":
        return cls(_bsc(legit_crossover), _bsc(eve_crossover))


def _bsc(p: float) -> np.ndarray:
    return np.array([[1 - p, p], [p, 1 - p]], dtype=float)


def _entropy_bits(p: np.ndarray, axis=None) -> np.ndarray:
    return -np.sum(xlogy(p, p), axis=axis) / math.log(2)


def channel_capacity(W: np.ndarray, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """Capacity of a discrete memoryless channel in bits (Blahut-Arimoto)."""
    W = np.asarray(W, dtype=float)
    px = np.full(W.shape[0], 1.0 / W.shape[0])
    for _ in range(max_iter):
        qy = px @ W
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(W > 0, W / qy, 1.0)
        dvec = np.sum(xlogy(W, ratio), axis=1)
        lo, hi = math.log2(math.e) * np.sum(px * dvec), math.log2(math.e) * dvec.max()
        if hi - lo < tol:
            break
        px = px * np.exp(dvec)
        px /= px.sum()
    return max(0.0, float(lo))


@dataclass(frozen=True, eq=False)
class BinningCodebook:
    """Codeword table of shape ``(bins, per_bin, N)`` over ``range(alphabet)``."""

    N: int
    bins: int
    per_bin: int
    alphabet: int
    table: np.ndarray

    @property
    def total(self) -> int:
        return self.bins * self.per_bin

    @property
    def message_bits(self) -> float:
        return math.log2(self.bins)

    def encode(self, w: int, rng: np.random.Generator) -> np.ndarray:
        """Codeword for message ``w`` with a uniformly chosen randomization index."""
        return self.table[w, rng.integers(self.per_bin)]


def _count(N: int, rate: float) -> int:
    return 1 << max(0, math.ceil(N * rate - 1e-9))


def build_codebook(channel: HopChannel, N: int, R: float, Rx: float, seed: int) -> BinningCodebook:
    """Random binning codebook with i.i.d. uniform codeword symbols."""
    if N < 1:
        raise ValueError("N must be positive")
    if R < 0 or Rx < 0:
        raise ValueError("rates must be non-negative")
    bins, per_bin = _count(N, R), _count(N, Rx)
    if bins * per_bin > MAX_CODEWORDS:
        raise EnumerationError(f"{bins * per_bin} codewords exceed the limit {MAX_CODEWORDS}")
    rng = substream(seed)
    table = rng.integers(channel.alphabet, size=(bins, per_bin, N))
    return BinningCodebook(N, bins, per_bin, channel.alphabet, table)


@dataclass(frozen=True)
class LeakageEstimate:
    mutual_info: float
    per_bit: float
    mean: float
    std: float
    samples: int


def _output_likelihoods(cb: BinningCodebook, eve: np.ndarray) -> np.ndarray:
    """``P(y^N | codeword)`` with shape ``(bins, per_bin, |Y|^N)``."""
    out = np.ones((cb.bins, cb.per_bin, 1))
    for t in range(cb.N):
        rows = eve[cb.table[:, :, t]]  # (bins, per_bin, |Y|)
        out = (out[..., :, None] * rows[..., None, :]).reshape(cb.bins, cb.per_bin, -1)
    return out


def _outer_hops(parts: list[np.ndarray]) -> np.ndarray:
    """Combine per-hop tensors ``(..., Y_h)`` into ``(..., Y_1 * ... * Y_H)``."""
    acc = parts[0]
    for p in parts[1:]:
        acc = (acc[..., :, None] * p[..., None, :]).reshape(*acc.shape[:-1], -1)
    return acc


def exact_leakage(
    codebooks: list[BinningCodebook], channels: list[HopChannel], shared_index: bool = False
) -> LeakageEstimate:
    """Exact ``I(W; Y_e(1..H))`` for uniformly distributed messages.

    Parameters
    ----------
    codebooks, channels : list
        One codebook and one channel per hop.
    shared_index : bool
        Reuse a single randomization index on every hop instead of drawing a
        fresh one per hop.  This is the insecure control.
    """
    if len(codebooks) != len(channels) or not codebooks:
        raise ValueError("need one channel per codebook and at least one hop")
    bins = codebooks[0].bins
    if any(cb.bins != bins for cb in codebooks):
        raise ValueError("all hops must carry the same message set (equal bin counts)")
    if shared_index and len({cb.per_bin for cb in codebooks}) != 1:
        raise ValueError("a shared index needs equal per-bin counts")
    per_msg = codebooks[0].per_bin if shared_index else 1
    for cb, ch in zip(codebooks, channels):
        per_msg *= ch.eve.shape[1] ** cb.N
    if per_msg > MAX_JOINT or bins * per_msg > 16 * MAX_JOINT:
        raise EnumerationError(f"output table of {bins} x {per_msg} entries is too large")

    lik = [_output_likelihoods(cb, ch.eve) for cb, ch in zip(codebooks, channels)]
    if not shared_index:
        lik = [x.mean(axis=1, keepdims=True) for x in lik]
    # one message at a time keeps memory at a single output table
    p_y = None
    h_cond = []
    for w in range(bins):
        p_w = _outer_hops([x[w] for x in lik]).mean(axis=0)
        h_cond.append(_entropy_bits(p_w))
        p_y = p_w if p_y is None else p_y + p_w
    p_y /= bins
    mi = float(_entropy_bits(p_y) - math.fsum(h_cond) / bins)
    mi = min(max(mi, 0.0), math.log2(bins))
    per_bit = mi / math.log2(bins) if bins > 1 else 0.0
    return LeakageEstimate(mi, per_bit, per_bit, 0.0, 1)


def ensemble_leakage(
    channel: HopChannel,
    H: int,
    N: int,
    R: float,
    Rx: float,
    seeds,
    shared_index: bool = False,
) -> LeakageEstimate:
    """Mean and std of per-bit leakage over codebook ensembles, one per seed.

    Hop ``h`` of seed ``s`` uses the codebook drawn from stream ``(s, h)``.
    """
    vals, mis = [], []
    for s in seeds:
        cbs = [build_codebook(channel, N, R, Rx, _hop_seed(s, h)) for h in range(H)]
        est = exact_leakage(cbs, [channel] * H, shared_index=shared_index)
        vals.append(est.per_bit)
        mis.append(est.mutual_info)
    vals = np.asarray(vals)
    std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return LeakageEstimate(float(np.mean(mis)), float(vals.mean()), float(vals.mean()), std, len(vals))


def _hop_seed(seed: int, hop: int) -> int:
    return derive_seed(seed, hop)


MODES = ("independent", "shared", "none")


def leakage_vs_blocklength(
    channel: HopChannel, H: int, N_list, seeds: int, R: float = 0.5, master_seed: int = 0
) -> list[dict]:
    """Ensemble-mean per-bit leakage for each ``N`` and randomization mode.

    ``independent`` uses ``Rx = C_e`` with fresh indices per hop, ``shared``
    the same codebooks with one index reused across hops, and ``none`` uses
    ``Rx = 0``.
    """
    ce = channel.eve_capacity
    seed_list = [master_seed * 1_000_003 + k for k in range(seeds)]
    rows = []
    for N in N_list:
        for mode in MODES:
            rx = 0.0 if mode == "none" else ce
            est = ensemble_leakage(channel, H, N, R, rx, seed_list, shared_index=(mode == "shared"))
            rows.append({"N": N, "H": H, "mode": mode, "rx": rx, "mean": est.mean, "std": est.std})
    return rows


def leakage_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["N", "H", "mode", "rx", "mean", "std"], lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
