"""Ergodic interference alignment with eavesdroppers.

Monte Carlo estimates of the achievable secrecy rate with Gaussian inputs.
The rate is the legitimate term ``1/2 E log2(1 + 2 snr |h|^2)``, seen
through paired channel uses, minus the eavesdropper term
``1/(2n) E log2 det(I + snr sum_i H_i H_i^*)``.  The module also covers the
closed-form Jensen bound on the eavesdropper term, the gamma-quantization
and complement pairing that make alignment exact, and a high-SNR
degrees-of-freedom fit.
"""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .rng import substream

_CHUNK = 8192


class RegularizationError(ArithmeticError):
    """A log-det argument was not numerically positive definite."""


@dataclass(frozen=True)
class FadingModel:
    """Fading law of every link.

    ``kind`` is ``"rayleigh"`` (``CN(0, s)``) or ``"fixed"`` (the constant
    ``value``).  ``negate`` draws ``-h`` instead of ``h``.
    """

    kind: str = "rayleigh"
    variance: float = 1.0
    value: complex = 1.0 + 0.0j
    negate: bool = False

    def __post_init__(self):
        if self.kind not in ("rayleigh", "fixed"):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.variance <= 0:
            raise ValueError("variance must be positive")

    @property
    def s(self) -> float:
        """``E|h|^2``."""
        return self.variance if self.kind == "rayleigh" else abs(self.value) ** 2

    @property
    def q(self) -> complex:
        """``E[Re h] + i E[Im h]``."""
        if self.kind == "rayleigh":
            return 0j
        return -complex(self.value) if self.negate else complex(self.value)


def sample_fading(model: FadingModel, count, seed: int, *keys: int) -> np.ndarray:
    """I.i.d. fading draws of shape ``count`` (an int or a shape tuple)."""
    shape = (count,) if isinstance(count, (int, np.integer)) else tuple(count)
    if math.prod(shape) < 1:
        raise ValueError("count must be positive")
    if model.kind == "fixed":
        h = np.full(shape, complex(model.value))
    else:
        rng = substream(seed, *keys)
        z = rng.standard_normal(shape + (2,))
        h = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(model.variance / 2)
    return -h if model.negate else h


@dataclass(frozen=True)
class ErgodicConfig:
    """Network size, SNR and Monte Carlo budget.

    ``collusion_sets`` partitions the eavesdroppers; ``None`` means each
    eavesdropper acts alone.
    """

    n: int
    n_e: int = 1
    snr: float = 10.0
    samples: int = 100_000
    collusion_sets: tuple[tuple[int, ...], ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.n_e < 0:
            raise ValueError("need n >= 1 and n_e >= 0")
        if self.snr < 0:
            raise ValueError("snr must be non-negative")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        if self.collusion_sets is not None:
            flat = [e for grp in self.collusion_sets for e in grp]
            if len(flat) != len(set(flat)):
                raise ValueError("collusion sets must be disjoint")
            if any(not 0 <= e < self.n_e for e in flat):
                raise ValueError("collusion sets reference unknown eavesdroppers")

    @property
    def set_sizes(self) -> list[int]:
        if self.n_e == 0:
            return []
        if self.collusion_sets is None:
            return [1]
        return sorted({len(g) for g in self.collusion_sets if g})


@dataclass(frozen=True)
class RateEstimate:
    legit_term: float
    eve_term: float
    rate: float
    legit_stderr: float
    eve_stderr: float

    @property
    def stderr(self) -> float:
        return math.hypot(self.legit_stderr, self.eve_stderr)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = len(x)
    mean = math.fsum(x.tolist()) / n
    se = float(np.std(x, ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return mean, se


def legit_term(cfg: ErgodicConfig, model: FadingModel) -> tuple[float, float]:
    """Mean and standard error of ``1/2 log2(1 + 2 snr |h|^2)``.

    Summing a channel use with its complement doubles the gain to ``2h`` and
    the noise variance to ``2 N0``, hence the factor 2 on the SNR.
    """
    h = sample_fading(model, cfg.samples, cfg.seed, 0)
    vals = 0.5 * np.log2(1.0 + 2.0 * cfg.snr * np.abs(h) ** 2)
    return _mean_se(vals)


def logdet2_chol(M: np.ndarray) -> np.ndarray:
    """``log2 det`` of a batch of Hermitian positive-definite matrices."""
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise RegularizationError("log-det argument is not positive definite") from exc
    diag = np.real(np.diagonal(L, axis1=-2, axis2=-1))
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise RegularizationError("log-det argument is not positive definite")
    return 2.0 * np.sum(np.log2(diag), axis=-1)


def eve_samples(cfg: ErgodicConfig, model: FadingModel, k: int) -> np.ndarray:
    """Per-draw values of ``1/(2n) log2 det(I_2k + snr G G^*)``, ``G`` of shape ``2k x n``.

    Column ``i`` of ``G`` stacks the gains from transmitter ``i`` to the ``k``
    colluding eavesdroppers at a channel use and at its paired use.
    """
    if k < 1:
        raise ValueError("collusion size must be >= 1")
    out = np.empty(cfg.samples)
    eye = np.eye(2 * k)
    for c0 in range(0, cfg.samples, _CHUNK):
        m = min(_CHUNK, cfg.samples - c0)
        G = sample_fading(model, (m, 2 * k, cfg.n), cfg.seed, 1, k, c0 // _CHUNK)
        M = eye + cfg.snr * (G @ np.conj(np.swapaxes(G, -1, -2)))
        out[c0 : c0 + m] = logdet2_chol(M) / (2 * cfg.n)
    return out


def eve_term(cfg: ErgodicConfig, model: FadingModel, k: int = 1) -> tuple[float, float]:
    """Mean and standard error of the eavesdropper term for ``k`` colluders."""
    return _mean_se(eve_samples(cfg, model, k))


def secure_rate(cfg: ErgodicConfig, model: FadingModel) -> RateEstimate:
    """Rate against the strongest collusion set, clamped at zero."""
    lt, lse = legit_term(cfg, model)
    et, ese = 0.0, 0.0
    for k in cfg.set_sizes:
        e, s = eve_term(cfg, model, k)
        if e > et:
            et, ese = e, s
    return RateEstimate(lt, et, max(0.0, lt - et), lse, ese)


def jensen_bound(n: int, snr: float, model: FadingModel) -> float:
    """Closed-form upper bound on the single-eavesdropper term."""
    s, q2 = model.s, abs(model.q) ** 2
    arg = 1.0 + 2.0 * n * s * snr + snr**2 * n**2 * (s * s - q2 * q2)
    if arg <= 0:
        raise ValueError("log argument of the bound is not positive")
    return math.log2(arg) / (2 * n)


@dataclass(frozen=True)
class DofFit:
    slope: float
    intercept: float
    residual: float
    rates: tuple[float, ...]


def fit_dof(
    n: int, snr_db, k: int = 1, samples: int = 100_000, seed: int = 0, model: FadingModel | None = None, top: int = 3
) -> DofFit:
    """Least-squares slope of rate against ``log2 snr`` on the top ``top`` SNR points.

    The same seed is used at every SNR (common random numbers), so the
    fitted slope is not blurred by independent sampling noise.
    """
    model = model or FadingModel()
    snr_db = sorted(float(x) for x in snr_db)
    rates = []
    for db in snr_db:
        snr = 10 ** (db / 10)
        cfg = ErgodicConfig(n=n, n_e=k, snr=snr, samples=samples, seed=seed, collusion_sets=(tuple(range(k)),))
        rates.append(secure_rate(cfg, model).rate)
    x = np.log2(10 ** (np.asarray(snr_db[-top:]) / 10))
    y = np.asarray(rates[-top:])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return DofFit(float(coef[0]), float(coef[1]), resid, tuple(rates))


def dof_target(n: int, k: int = 1) -> float:
    return max(0.0, 0.5 - k / n)


# ---------------------------------------------------------------------------
# quantization and pairing


@dataclass(frozen=True)
class QuantScheme:
    """Grid step ``gamma`` of ``gamma (Z + jZ)`` and truncation radius ``tau``."""

    gamma: float = 1.0
    tau: float = 1.5

    def __post_init__(self):
        if self.gamma <= 0 or self.tau <= 0:
            raise ValueError("gamma and tau must be positive")

    def to_grid(self, z: np.ndarray) -> np.ndarray:
        """Integer grid coordinates, shape ``z.shape + (2,)``; ties go to the smaller point."""
        z = np.asarray(z)
        t = np.stack([z.real, z.imag], axis=-1) / self.gamma
        return np.ceil(t - 0.5).astype(np.int64)

    def quantize(self, z: np.ndarray) -> np.ndarray:
        g = self.to_grid(z)
        return self.gamma * g[..., 0] + 1j * self.gamma * g[..., 1]

    def entry_alphabet_size(self) -> int:
        r = int(math.floor(self.tau / self.gamma))
        a = np.arange(-r, r + 1)
        return int(np.count_nonzero((a[:, None] ** 2 + a[None, :] ** 2) * self.gamma**2 <= self.tau**2 + 1e-12))

    def alphabet_size(self, n: int) -> int:
        return self.entry_alphabet_size() ** (n * n)

    def alphabet_bounds(self, n: int) -> tuple[float, float]:
        r = self.tau / self.gamma
        return (math.sqrt(2) * r) ** (2 * n * n), (2 * r) ** (2 * n * n)


def complement_grid(g: np.ndarray) -> np.ndarray:
    """Grid coordinates of the complement type: same diagonal, negated off-diagonal."""
    n = g.shape[-3]
    out = -g
    idx = np.arange(n)
    out[..., idx, idx, :] = g[..., idx, idx, :]
    return out


@dataclass(frozen=True, eq=False)
class Pairing:
    pairs: np.ndarray  # (P, 2) channel-use indices (t, t~)
    discarded: np.ndarray
    truncated: np.ndarray
    type_counts: dict = field(repr=False)

    @property
    def discard_count(self) -> int:
        return len(self.discarded)

    @property
    def discard_fraction(self) -> float:
        total = 2 * len(self.pairs) + len(self.discarded) + len(self.truncated)
        return (len(self.discarded) + len(self.truncated)) / total if total else 0.0


def quantize_and_pair(gains: np.ndarray, q: QuantScheme) -> Pairing:
    """Pair each channel use with a later use of the complement type.

    Uses whose quantized gains leave the disc of radius ``tau`` are
    truncated.  Within each (type, complement) couple the ``i``-th
    occurrence of one is matched with the ``i``-th of the other; a
    self-complementary type pairs consecutive occurrences.  Leftovers are
    discarded.
    """
    gains = np.asarray(gains)
    if gains.ndim != 3 or gains.shape[1] != gains.shape[2]:
        raise ValueError("gains must have shape (T, n, n)")
    g = q.to_grid(gains)
    radius2 = (g[..., 0] ** 2 + g[..., 1] ** 2) * q.gamma**2
    inside = np.all(radius2 <= q.tau**2 + 1e-12, axis=(1, 2))
    comp = complement_grid(g)
    occ: dict[bytes, list[int]] = defaultdict(list)
    key_of = {}
    for t in np.nonzero(inside)[0].tolist():
        key = g[t].tobytes()
        occ[key].append(t)
        key_of[key] = comp[t].tobytes()
    pairs, discarded = [], []
    done = set()
    for key in sorted(occ):
        if key in done:
            continue
        ck = key_of[key]
        mine, theirs = occ[key], occ.get(ck, [])
        done.update((key, ck))
        if ck == key:
            half = len(mine) // 2 * 2
            pairs.extend(zip(mine[0:half:2], mine[1:half:2]))
            discarded.extend(mine[half:])
        else:
            k = min(len(mine), len(theirs))
            pairs.extend(zip(mine[:k], theirs[:k]))
            discarded.extend(mine[k:] + theirs[k:])
    counts = {k: len(v) for k, v in occ.items()}
    return Pairing(
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        np.asarray(sorted(discarded), dtype=np.int64),
        np.nonzero(~inside)[0],
        counts,
    )


def aligned_channel_check(
    gains: np.ndarray, pairs: np.ndarray, X: np.ndarray, quant: QuantScheme | None = None
) -> float:
    """Largest cross-interference left after summing the two uses of each pair.

    ``X`` holds one codeword symbol per transmitter and pair, shape
    ``(P, n)``; the same symbol is sent at both uses and the noise is zero.
    With ``quant`` the quantized gains are used, otherwise the raw gains.
    """
    gains = np.asarray(gains)
    if quant is not None:
        gains = quant.quantize(gains)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return 0.0
    X = np.broadcast_to(np.asarray(X), (len(pairs), gains.shape[1]))
    S = gains[pairs[:, 0]] + gains[pairs[:, 1]]
    n = S.shape[1]
    off = S * (1 - np.eye(n))
    interference = np.einsum("pij,pj->pi", off, X)
    return float(np.max(np.abs(interference)))


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = ["n", "n_e", "k", "snr_db", "rate", "stderr", "eve_term", "bound"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
