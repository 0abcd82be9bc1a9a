"""Desk-scale Monte-Carlo checks of the analytic results.

Random Gaussian codebooks, the information-density threshold decoder with
early decoding and SIC, and empirical error rates with Wilson intervals.

Every trial draws fresh codebooks, so error rates are averages over the
random-coding ensemble. Trial ``t`` uses ``numpy.random.default_rng([seed, t])``
and never depends on any other trial, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .core import LOG2E
from .ed import ChannelConfig
from .region import cross_term_tail

#: Upper limit on ``m1 * n2_used * trials`` for :func:`simulate_ed`.
GUARD_OPS = 1e10

# cross-term trials are drawn in fixed-size blocks, one RNG stream per block
_BLOCK = 10_000


class GuardError(RuntimeError):
    """Requested simulation exceeds the desk-scale budget."""


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class Codebook:
    m: int
    n: int
    power: float
    delta: float
    seed: object
    symbols: np.ndarray = field(repr=False)
    remapped: int = 0


def _draw_codebook(rng, m, n, power, delta):
    var = power - delta
    if var <= 0:
        return np.zeros((m, n)), 0
    x = rng.standard_normal((m, n)) * math.sqrt(var)
    bad = np.einsum("ij,ij->i", x, x) > n * power
    x[bad] = 0.0
    return x, int(bad.sum())


def gen_codebook(m: int, n: int, power: float, delta: float = 0.0, seed=0) -> Codebook:
    """I.i.d. Gaussian codebook with variance ``power - delta``.

    Codewords with ``||x||^2 > n * power`` are replaced by the all-zero word.
    The number replaced is stored in ``remapped``.
    """
    if m < 2 or n < 1:
        raise ValueError("need m >= 2 and n >= 1")
    if not (0.0 <= delta <= power):
        raise ValueError("need 0 <= delta <= power")
    x, bad = _draw_codebook(np.random.default_rng(seed), m, n, power, delta)
    return Codebook(m, n, power, delta, seed, x, bad)


def info_density(x, y, gain, power, per_symbol=False):
    """Information density in bits of codeword(s) ``x`` against output ``y``.

    The channel is ``y = sqrt(gain) * x + z`` with unit-variance noise and an
    ``N(0, power)`` input. ``x`` may be a single codeword or a stack of them
    (rows). With ``per_symbol=True`` the per-symbol terms are returned
    instead of their sum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = gain * power
    resid = y - math.sqrt(gain) * x
    terms = 0.5 * LOG2E * math.log1p(s) + 0.5 * LOG2E * (y * y / (1.0 + s) - resid * resid)
    return terms if per_symbol else terms.sum(axis=-1)


def _densities(cb, y, gain, power):
    """Density of every codebook row against ``y``. Uses a matrix product, not a row loop."""
    s = gain * power
    sg = math.sqrt(gain)
    n = y.shape[-1]
    yy = float(y @ y)
    xy = cb @ y
    xx = np.einsum("ij,ij->i", cb, cb)
    resid = yy - 2.0 * sg * xy + gain * xx
    return 0.5 * LOG2E * (n * math.log1p(s) + yy / (1.0 + s) - resid)


def _unique_decode(dens, threshold, truth) -> bool:
    above = np.flatnonzero(dens > threshold)
    return above.size == 1 and above[0] == truth


@dataclass(frozen=True)
class TrialReport:
    trials: int
    errors_step1: int
    errors_step2: int
    errors_weak: int
    empirical_eps: dict
    density_mean: float
    density_var: float
    weak_density_mean: float
    weak_density_var: float
    remapped: int

    def as_dict(self) -> dict:
        out = {
            "trials": self.trials,
            "errors_step1": self.errors_step1,
            "errors_step2": self.errors_step2,
            "errors_weak": self.errors_weak,
            "density_mean": self.density_mean,
            "density_var": self.density_var,
            "weak_density_mean": self.weak_density_mean,
            "weak_density_var": self.weak_density_var,
            "remapped": self.remapped,
        }
        for k, (rate, lo, hi) in self.empirical_eps.items():
            out[f"eps_{k}"] = rate
            out[f"eps_{k}_low"] = lo
            out[f"eps_{k}_high"] = hi
        return out


def simulate_ed(cfg: ChannelConfig, m1: int, m2: int, n2_used: int | None = None,
                trials: int = 1000, seed=0, backoff: float = 0.0) -> TrialReport:
    """Simulate the two-step decoder at the strong user and the weak user's decoder.

    Step 1 decodes the weak user's message from the first ``n2_used``
    received symbols, treating the strong user's signal as noise. Step 2
    removes the decoded codeword over the strong user's ``n2`` symbols and
    decodes its own message. The weak user decodes over all ``n1`` symbols,
    with interference on the first ``n2``. Every decoder accepts the unique
    message whose density exceeds ``log2(m)``. Zero or several candidates
    count as an error.

    ``backoff`` is one value shared by both users or a ``(user1, user2)``
    pair. Without backoff about half of all codewords break the power
    constraint and are remapped to zero.

    A step-1 failure feeds the wrong codeword into the subtraction, so
    ``errors_step2`` includes propagated failures.

    Raises
    ------
    GuardError
        If ``m1 * n2_used * trials`` exceeds :data:`GUARD_OPS`.
    """
    if cfg.p1 is None or cfg.p2 is None:
        raise ValueError("simulate_ed needs individual powers p1 and p2")
    n1, n2 = cfg.n1, cfg.n2
    n2_used = n2 if n2_used is None else int(n2_used)
    if not (1 <= n2_used <= n2):
        raise ValueError(f"n2_used must lie in [1, n2={n2}]")
    if m1 < 2 or m2 < 2 or trials < 1:
        raise ValueError("need m1, m2 >= 2 and trials >= 1")
    ops = float(m1) * n2_used * trials
    if ops > GUARD_OPS:
        raise GuardError(f"m1*n2_used*trials = {ops:.3g} exceeds the desk-scale limit {GUARD_OPS:.0e}")
    bo1, bo2 = _backoffs(backoff)
    if not (0.0 <= bo1 < cfg.p1 and 0.0 <= bo2 < cfg.p2):
        raise ValueError("each backoff must lie in [0, power)")

    h1, h2 = cfg.h1, cfg.h2
    p1b, p2b = cfg.p1 - bo1, cfg.p2 - bo2
    g2 = h2 / (1.0 + h2 * p2b)
    g1 = h1 / (1.0 + h1 * p2b)
    th1, th2 = math.log2(m1), math.log2(m2)
    err1 = err2 = errw = remapped = 0
    w_sum = w_sq = 0.0
    weak = np.empty(trials)

    for t in range(trials):
        rng = np.random.default_rng([_seed_int(seed), t])
        cb1, b1 = _draw_codebook(rng, m1, n1, cfg.p1, bo1)
        cb2, b2 = _draw_codebook(rng, m2, n2, cfg.p2, bo2)
        remapped += b1 + b2
        w1, w2 = int(rng.integers(m1)), int(rng.integers(m2))
        x1, x2 = cb1[w1], cb2[w2]
        z2 = rng.standard_normal(n2)
        z1 = rng.standard_normal(n1)

        y2 = math.sqrt(h2) * (x1[:n2] + x2) + z2
        # step 1: scale so the interference-plus-noise has unit variance
        y_eq = y2[:n2_used] / math.sqrt(1.0 + h2 * p2b)
        d1 = _densities(cb1[:, :n2_used], y_eq, g2, p1b)
        ok1 = _unique_decode(d1, th1, w1)
        err1 += not ok1
        w = info_density(x1[:n2_used], y_eq, g2, p1b, per_symbol=True)
        w_sum += float(w.sum())
        w_sq += float(w @ w)

        # step 2: subtract whatever step 1 produced
        above = np.flatnonzero(d1 > th1)
        guess = cb1[above[0]] if above.size == 1 else np.zeros(n1)
        y_sic = y2 - math.sqrt(h2) * guess[:n2]
        d2 = _densities(cb2, y_sic, h2, p2b)
        err2 += not _unique_decode(d2, th2, w2)

        # weak user: two segments with different effective gains
        y1 = math.sqrt(h1) * x1 + z1
        y1[:n2] += math.sqrt(h1) * x2
        ya = y1[:n2] / math.sqrt(1.0 + h1 * p2b)
        dw = _densities(cb1[:, :n2], ya, g1, p1b)
        if n1 > n2:
            dw = dw + _densities(cb1[:, n2:], y1[n2:], h1, p1b)
        errw += not _unique_decode(dw, th1, w1)
        weak[t] = dw[w1]

    count = trials * n2_used
    mean = w_sum / count
    var = max(w_sq / count - mean * mean, 0.0) * count / max(count - 1, 1)
    rates = {}
    for name, k in (("step1", err1), ("step2", err2), ("weak", errw)):
        lo, hi = wilson_interval(k, trials)
        rates[name] = (k / trials, lo, hi)
    return TrialReport(
        trials=trials, errors_step1=err1, errors_step2=err2, errors_weak=errw,
        empirical_eps=rates, density_mean=mean, density_var=var,
        weak_density_mean=float(weak.mean()),
        weak_density_var=float(weak.var(ddof=1)) if trials > 1 else 0.0,
        remapped=remapped,
    )


def _backoffs(backoff):
    if np.ndim(backoff) == 0:
        return float(backoff), float(backoff)
    bo1, bo2 = backoff
    return float(bo1), float(bo2)


def _seed_int(seed) -> int:
    return 0 if seed is None else int(seed)


def symbol_density_samples(h2, p1_bar, p2_bar, x, samples, seed=0):
    """Per-symbol step-1 densities for a fixed transmitted symbol ``x``.

    The strong user's symbol and the noise are drawn afresh for every
    sample, and the received value is built from the physical channel
    before scaling. This keeps the check independent of the closed-form
    moments.
    """
    rng = np.random.default_rng(seed)
    x2 = rng.standard_normal(samples) * math.sqrt(p2_bar)
    z = rng.standard_normal(samples)
    y = math.sqrt(h2) * (x + x2) + z
    g2 = h2 / (1.0 + h2 * p2_bar)
    return info_density(np.full(samples, x), y / math.sqrt(1.0 + h2 * p2_bar), g2, p1_bar, per_symbol=True)


@dataclass(frozen=True)
class CrossTermReport:
    probability: float
    low: float
    high: float
    trials: int
    count: int
    bound: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)

    @property
    def within_bound(self) -> bool:
        """Empirical rate at most the analytic tail plus three half-widths."""
        return self.probability <= self.bound + 3.0 * self.half_width


def simulate_cross_term(n2, p11_bar, p2_bar, delta, trials=100_000, seed=0) -> CrossTermReport:
    """Empirical ``Pr[sum_j X1_j X2_j >= n2 * delta]`` for independent Gaussian codewords."""
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials")
    hits = 0
    s11, s2 = math.sqrt(p11_bar), math.sqrt(p2_bar)
    for b, start in enumerate(range(0, trials, _BLOCK)):
        size = min(_BLOCK, trials - start)
        rng = np.random.default_rng([_seed_int(seed), b])
        x1 = rng.standard_normal((size, n2)) * s11
        x2 = rng.standard_normal((size, n2)) * s2
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", x1, x2) >= n2 * delta))
    lo, hi = wilson_interval(hits, trials)
    return CrossTermReport(hits / trials, lo, hi, trials, hits, cross_term_tail(n2, delta, p11_bar, p2_bar))


def weak_user_total_moments(cfg: ChannelConfig, backoff: float = 0.0):
    """Expected total weak-user density over ``n1`` symbols and its variance, in bits.

    Closed-form reference for :attr:`TrialReport.weak_density_mean`.
    """
    from .region import weak_user_moments

    bo1, bo2 = _backoffs(backoff)
    p1b, p2b = cfg.p1 - bo1, cfg.p2 - bo2
    mean, disp = weak_user_moments(cfg.h1, cfg.p, p1b, p1b, p2b)
    return cfg.n1 * mean, cfg.n1 * disp


__all__ = [
    "GUARD_OPS", "GuardError", "Codebook", "TrialReport", "CrossTermReport",
    "gen_codebook", "info_density", "simulate_ed", "simulate_cross_term",
    "symbol_density_samples", "wilson_interval", "weak_user_total_moments",
]
