"""Closed-form SNR bounds and secure rates for the path-loss model.

Lengths are in the same unit as the cell side ``c``; the hop distance ``d``
and the zone factors ``f_t``, ``f_e`` are counted in cells.  Rates are in
bits per channel use (base-2 logarithms); growth schedules in ``n`` use the
natural logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DivergenceError(ValueError):
    """The interference series does not converge (alpha <= 2)."""


class ConstraintError(ValueError):
    """The TDMA spacing is too tight for the interference bound."""


class InfeasibleError(ValueError):
    """The secrecy-zone factor does not guarantee a positive rate."""


class ScheduleError(ValueError):
    """A zone schedule violates its parameter constraints."""


@dataclass(frozen=True)
class PathLossParams:
    """Scalar parameters of a single secure hop.

    Parameters
    ----------
    alpha : float
        Path-loss exponent, strictly above 2.
    P, N0 : float
        Transmit and noise power (linear).
    c : float
        Cell side length.
    d : int
        Hop distance in cells.
    f_t : float
        TDMA spacing factor; concurrent transmitters are ``f_t d`` cells apart.
    f_e : float
        Secrecy-zone factor; the zone radius is ``f_e d`` cells.
    """

    alpha: float
    P: float
    N0: float
    c: float
    d: int
    f_t: float
    f_e: float

    def __post_init__(self):
        if not self.alpha > 2:
            raise DivergenceError("path-loss exponent must exceed 2")
        if self.P <= 0 or self.N0 <= 0:
            raise ValueError("P and N0 must be positive")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.f_e < 1:
            raise ValueError("f_e must be >= 1")

    def with_(self, **kw) -> "PathLossParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class ZoneSchedule:
    f: tuple[float, ...]
    epsilon: float = 0.1

    def __post_init__(self):
        f = tuple(float(x) for x in self.f)
        object.__setattr__(self, "f", f)
        if not f:
            raise ScheduleError("schedule needs at least one level")
        if any(x < 1 for x in f):
            raise ScheduleError("zone factors must be >= 1")
        if any(b < a for a, b in zip(f, f[1:])):
            raise ScheduleError("zone factors must be non-decreasing")
        if not 0 < self.epsilon < 1:
            raise ScheduleError("epsilon must lie in (0, 1)")

    @property
    def levels(self) -> int:
        return len(self.f)


@dataclass(frozen=True)
class RateBreakdown:
    snr_tr_lb: float
    snr_e_ub: float
    tdma_slots: int
    rate_bits: float


# ---------------------------------------------------------------------------
# interference series


def _series_term_parts(y: float, alpha: float):
    """``f(x) = x (x - 1/2)^-alpha`` written as ``y^(1-a) + y^(-a)/2`` with ``y = x - 1/2``."""
    b1, b2 = 1.0 - alpha, -alpha

    def d1(b):
        return b * y ** (b - 1)

    def d3(b):
        return b * (b - 1) * (b - 2) * y ** (b - 3)

    f = y**b1 + 0.5 * y**b2
    f1 = d1(b1) + 0.5 * d1(b2)
    f3 = d3(b1) + 0.5 * d3(b2)
    integral = y ** (2.0 - alpha) / (alpha - 2.0) + 0.5 * y ** (1.0 - alpha) / (alpha - 1.0)
    return f, f1, f3, integral


def series_S(alpha: float, tol: float = 1e-12) -> float:
    """``S(alpha) = sum_{i>=1} i (i - 1/2)^-alpha`` with absolute error at most ``tol``.

    The first ``M`` terms are summed exactly (``math.fsum``); the tail is the
    integral from ``M`` plus Euler-Maclaurin corrections.  The summand is a
    sum of completely monotone powers, so the remainder is bounded by the
    last correction ``|f'''(M)| / 720``; ``M`` doubles until that is below
    ``tol / 2``.
    """
    if not alpha > 2:
        raise DivergenceError("S(alpha) diverges for alpha <= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = 64
    while True:
        f, f1, f3, integral = _series_term_parts(M - 0.5, alpha)
        if abs(f3) / 720.0 <= tol / 2 or M >= 1 << 26:
            break
        M *= 2
    i = np.arange(1, M + 1, dtype=float)
    head = math.fsum((i * (i - 0.5) ** (-alpha)).tolist())
    # sum_{i>M} f(i) = int_M^inf f - f(M)/2 - f'(M)/12 + f'''(M)/720 - ...
    tail = integral - f / 2.0 - f1 / 12.0 + f3 / 720.0
    return head + tail


# ---------------------------------------------------------------------------
# single hop


def interference_term(p: PathLossParams, S: float | None = None) -> float:
    """Worst-case aggregate interference ``8 P (f_t d c)^-alpha S(alpha)``."""
    S = series_S(p.alpha) if S is None else S
    return 8.0 * p.P * (p.f_t * p.d * p.c) ** (-p.alpha) * S


def snr_tr_lower(p: PathLossParams) -> float:
    """Lower bound on the SNR between a transmitter and its receiver ``d`` cells away."""
    if p.f_t * p.d < 2 * (p.d + 1) - 1e-12:
        raise ConstraintError(f"f_t d = {p.f_t * p.d} must be at least 2(d+1) = {2 * (p.d + 1)}")
    signal = p.P * (p.d + 1) ** (-p.alpha) * p.c ** (-p.alpha) * 2.0 ** (-p.alpha / 2)
    return signal / (p.N0 + interference_term(p))


def snr_e_upper(p: PathLossParams) -> float:
    """Upper bound on any single eavesdropper's SNR outside the secrecy zone."""
    return p.P * (p.f_e * p.d * p.c) ** (-p.alpha) / p.N0


def min_feasible_f_e(p: PathLossParams) -> float:
    """Infimum of the zone factors for which the per-hop rate is guaranteed positive.

    Any ``f_e`` strictly above the returned value is admissible.
    """
    a = p.alpha
    interf = (p.P / p.N0) * 8.0 * (p.f_t * p.d * p.c) ** (-a) * series_S(a)
    lhs = (p.d + 1) ** a * 2.0 ** (a / 2) * p.d ** (-a) * (1.0 + interf)
    return lhs ** (1.0 / a)


def tdma_slots(p: PathLossParams) -> int:
    return max(1, math.ceil((p.f_t * p.d) ** 2 - 1e-9))


def _rate(snr_tr: float, snr_e: float, slots: int) -> float:
    return max(0.0, (math.log2(1.0 + snr_tr) - math.log2(1.0 + snr_e)) / slots)


def secure_rate_per_hop(p: PathLossParams) -> RateBreakdown:
    """Secure rate of one hop after TDMA, against a single eavesdropper.

    Raises
    ------
    InfeasibleError
        If ``f_e`` does not exceed :func:`min_feasible_f_e`.
    """
    fmin = min_feasible_f_e(p)
    if not p.f_e > fmin:
        raise InfeasibleError(f"f_e = {p.f_e} must exceed {fmin}")
    s_tr, s_e = snr_tr_lower(p), snr_e_upper(p)
    slots = tdma_slots(p)
    return RateBreakdown(s_tr, s_e, slots, _rate(s_tr, s_e, slots))


# ---------------------------------------------------------------------------
# colluding eavesdroppers


def collusion_snr_upper(p: PathLossParams, z: ZoneSchedule, lambda_e: float) -> float:
    """Bound on the combined SNR of all eavesdroppers outside the first-level zone."""
    if z.levels < 2:
        raise ScheduleError("collusion bound needs at least two zone levels")
    if lambda_e < 0:
        raise ValueError("lambda_e must be non-negative")
    a = p.alpha
    f = np.asarray(z.f)
    total = math.fsum((f[1:] ** 2 * f[:-1] ** (-a)).tolist())
    pre = p.P * (1 + z.epsilon) * 9.0 * p.c ** (2 - a) * p.d ** (-a) / p.N0
    return pre * lambda_e * p.d**2 * total


def colluding_rate_per_hop(p: PathLossParams, z: ZoneSchedule, lambda_e: float) -> RateBreakdown:
    """Per-hop secure rate when the eavesdroppers pool their observations."""
    s_tr = snr_tr_lower(p)
    s_e = collusion_snr_upper(p, z, lambda_e)
    slots = tdma_slots(p)
    return RateBreakdown(s_tr, s_e, slots, _rate(s_tr, s_e, slots))


def schedule_levels(n: float, alpha: float) -> int:
    return 1 + int(math.floor(math.log(math.log(n)) / math.log(alpha / 2) + 1e-12))


def highway_zone_schedule(
    n: float, lambda_bar: float, delta: float, c: float, d: int, alpha: float, epsilon: float = 0.1
) -> ZoneSchedule:
    """Multi-level zones for highway hops under ``lambda_e <= lambda_bar (ln n)^-2``.

    Level ``k`` has factor ``sqrt(delta / (9 lambda_bar c^2 d^2)) (ln n)^((alpha/2)^(k-1))``.
    """
    if n < 3:
        raise ScheduleError("n must be at least 3")
    if not alpha > 2:
        raise DivergenceError("path-loss exponent must exceed 2")
    if lambda_bar <= 0 or delta <= 0:
        raise ScheduleError("lambda_bar and delta must be positive")
    L = schedule_levels(n, alpha)
    base = math.sqrt(delta / (9.0 * lambda_bar * c * c * d * d))
    ln = math.log(n)
    return ZoneSchedule(tuple(base * ln ** ((alpha / 2) ** k) for k in range(L)), epsilon)


def access_conditions(
    n_grid, rho: float, alpha: float, r: float, kappa2: float = 1.0, levels: int | None = None
) -> dict[str, bool]:
    """Numerical check of the three access-schedule conditions over ``n_grid``.

    Uses ``lambda_e = (ln n)^-(2+rho)`` and ``d = kappa2 ln n``.  Returns
    whether the first-level exposure decreases, every higher-level exposure
    increases and the collusion sum stays bounded by its largest grid value
    at the smallest ``n``.
    """
    ns = sorted(float(x) for x in n_grid)
    first, higher, sums = [], [], []
    for n in ns:
        z = access_zone_schedule(n, rho, alpha, r, levels=levels, check=False)
        ln = math.log(n)
        lam = ln ** (-(2 + rho))
        d = kappa2 * ln
        f = np.asarray(z.f)
        first.append(lam * f[0] ** 2 * d * d)
        higher.append(lam * f[1:] ** 2 * d * d)
        sums.append(lam * d * d * float(np.sum(f[1:] ** 2 * f[:-1] ** (-alpha))))
    dec = all(b < a for a, b in zip(first, first[1:]))
    inc = all(
        np.all(hb > ha) for ha, hb in zip(higher, higher[1:]) if len(ha) and len(ha) == len(hb)
    )
    bounded = max(sums) <= sums[0] * (1 + 1e-9)
    return {"s11e1": dec, "s11e2": inc, "s11e3": bounded}


def access_zone_schedule(
    n: float,
    rho: float,
    alpha: float,
    r: float,
    levels: int | None = None,
    epsilon: float = 0.1,
    check: bool = True,
    kappa2: float = 1.0,
) -> ZoneSchedule:
    """Multi-level zones for access hops, ``f_k = (ln n)^(r (alpha/2)^(k-1))``.

    ``r`` must lie strictly inside ``(rho/alpha, rho/2)``.  With ``check`` the
    scheduling conditions are verified on ``n = 2^10 .. 2^30``.
    """
    if rho <= 0:
        raise ScheduleError("rho must be positive")
    if not alpha > 2:
        raise DivergenceError("path-loss exponent must exceed 2")
    if not rho / alpha < r < rho / 2:
        raise ScheduleError(f"r = {r} must lie strictly inside ({rho / alpha}, {rho / 2})")
    if n < 3:
        raise ScheduleError("n must be at least 3")
    L = max(2, schedule_levels(n, alpha)) if levels is None else int(levels)
    ln = math.log(n)
    z = ZoneSchedule(tuple(max(1.0, ln ** (r * (alpha / 2) ** k)) for k in range(L)), epsilon)
    if check:
        res = access_conditions([2.0**e for e in range(10, 31)], rho, alpha, r, kappa2, levels=L)
        bad = [k for k, ok in res.items() if not ok]
        if bad:
            raise ScheduleError(f"scheduling conditions fail numerically: {bad}")
    return z


# ---------------------------------------------------------------------------
# dense networks


def rescale_dense(p: PathLossParams, n: float) -> PathLossParams:
    """Map extended-network parameters to the unit-area network with ``n`` nodes.

    Lengths shrink by ``sqrt(n)`` and the power by ``sqrt(n)^alpha``, which
    leaves every SNR unchanged.
    """
    s = math.sqrt(n)
    return p.with_(P=p.P / s**p.alpha, c=p.c / s)
