"""Early decoding (ED) at the stronger user.

The stronger user has the shorter blocklength ``n2``. It decodes the weaker
user's length-``n1`` codeword from only the first ``n2`` received symbols,
then strips it off (first SIC step). This module computes how many symbols
that takes, the matching non-asymptotic error bound, and the asymptotic
baseline used for latency comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LOG2E, capacity, q_function, q_inverse, second_order_rate


@dataclass(frozen=True)
class ChannelConfig:
    """Two-user Gaussian broadcast channel with heterogeneous blocklengths.

    User 1 is the weak user (gain ``h1``, long blocklength ``n1``) and user 2
    the strong one (``h2 >= h1``, ``n2 <= n1``). Give either the individual
    powers ``p1``/``p2`` (IPC) or the total power ``pt`` (SPC), or both.
    """

    h1: float
    h2: float
    n1: int
    n2: int
    eps: float
    p1: float | None = None
    p2: float | None = None
    pt: float | None = None

    def __post_init__(self):
        if not (self.h1 > 0 and self.h2 >= self.h1):
            raise ValueError(f"need h2 >= h1 > 0, got h1={self.h1}, h2={self.h2}")
        if int(self.n1) != self.n1 or int(self.n2) != self.n2:
            raise ValueError("blocklengths must be integers")
        if not (self.n1 >= self.n2 >= 1):
            raise ValueError(f"need n1 >= n2 >= 1, got n1={self.n1}, n2={self.n2}")
        if not (0.0 < self.eps < 1.0):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if self.pt is None and (self.p1 is None or self.p2 is None):
            raise ValueError("give p1 and p2 (IPC) or pt (SPC)")
        for name in ("p1", "p2", "pt"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite power, got {v}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))

    @property
    def p(self) -> float:
        """Overlap fraction ``n2 / n1``."""
        return self.n2 / self.n1

    def replace(self, **changes) -> "ChannelConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class EdBound:
    n_tilde_min: float
    n_required: int
    feasible: bool
    gamma: float


def equivalent_sic_gain(h2, p2_bar):
    """Gain seen by the strong user when it treats its own signal as noise."""
    return h2 / (1.0 + h2 * p2_bar)


def ed_denominators(gamma):
    """The two positive denominators of the ED symbol bound.

    Returns ``(d1, d2)`` with ``d1 = C(g) - log2(e) g / (2 (1+g))`` and
    ``d2 = 2 (1+g) C(g) - log2(e) g = 2 (1+g) d1``.
    """
    gamma = np.asarray(gamma, dtype=float)
    # ln(1+g) - g/(1+g) > 0 for g > 0; evaluate in nats to keep precision
    gap = np.log1p(gamma) - gamma / (1.0 + gamma)
    d1 = 0.5 * LOG2E * gap
    d2 = 2.0 * (1.0 + gamma) * d1
    if d1.ndim == 0:
        return float(d1), float(d2)
    return d1, d2


def ed_symbol_threshold(log_m1, n1, gamma, qinv_sic1):
    """Fractional symbol bound with ``Q^{-1}(eps_sic1)`` given directly.

    Vectorized workhorse behind :func:`ed_min_symbols`; the optimizers call it
    on whole grids.
    """
    gamma = np.asarray(gamma, dtype=float)
    d1, d2 = ed_denominators(gamma)
    spread = LOG2E * np.sqrt(4.0 * gamma + 2.0 * gamma * gamma)
    return np.asarray(log_m1) / d1 + spread * np.asarray(qinv_sic1) / d2 * math.sqrt(n1)


def ed_min_symbols(log_m1, n1, gamma, eps_sic1, n2=None) -> EdBound:
    """Minimum number of received symbols for a successful early decode.

    Parameters
    ----------
    log_m1 : float
        Weak user's message size in bits.
    n1 : int
        Weak user's blocklength.
    gamma : float
        Equivalent SNR of the first SIC step, ``g2 * P1_bar``.
    eps_sic1 : float
        Target error probability of the first SIC step.
    n2 : int, optional
        Strong user's blocklength used for the feasibility verdict. Defaults
        to ``n1``.

    Returns
    -------
    EdBound
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if log_m1 < 0:
        raise ValueError("log_m1 must be nonnegative")
    n_tilde = float(ed_symbol_threshold(log_m1, n1, gamma, q_inverse(eps_sic1)))
    n_req = max(1, math.ceil(n_tilde))
    limit = n1 if n2 is None else n2
    return EdBound(n_tilde_min=n_tilde, n_required=n_req, feasible=n_req <= limit, gamma=float(gamma))


def asymptotic_ed_fraction(h1, h2, p_bar):
    """Asymptotic fraction of the long codeword needed to early-decode it.

    Returns ``(fbl_limit, first_order)``. ``fbl_limit`` is the ``n1 -> inf``
    limit of the finite-blocklength bound. ``first_order`` is the classical
    ``C(h1 P)/C(h2 P)``. The first is always strictly larger.
    """
    if not (h2 >= h1 > 0 and p_bar > 0):
        raise ValueError("need h2 >= h1 > 0 and p_bar > 0")
    c_weak = capacity(h1 * p_bar)
    d1, _ = ed_denominators(h2 * p_bar)
    assert d1 > 0
    return c_weak / d1, c_weak / capacity(h2 * p_bar)


@dataclass(frozen=True)
class DtConstants:
    """Constants of the non-asymptotic DT error bound for the first SIC step.

    Parameters
    ----------
    g2 : float
        Equivalent gain of the first SIC step.
    p1 : float
        Weak user's codeword power.
    a : float
        Peak-constraint exponent, ``0 < a < 1/2``.
    delta : float, optional
        Power backoff; defaults to 1% of ``p1``.
    violation : {"delta", "half"}
        Exponent of the power-violation term: ``exp(-n2 delta^2 / 4)`` or
        ``exp(-n2 / 2)``.
    """

    g2: float
    p1: float
    a: float = 0.25
    delta: float | None = None
    violation: str = "delta"

    def __post_init__(self):
        if not (0.0 < self.a < 0.5):
            raise ValueError("peak exponent a must lie in (0, 1/2)")
        if self.delta is None:
            object.__setattr__(self, "delta", 0.01 * self.p1)
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.violation not in ("delta", "half"):
            raise ValueError("violation must be 'delta' or 'half'")
        if not (self.g2 > 0 and self.p1 > 0):
            raise ValueError("g2 and p1 must be positive")

    @property
    def gamma(self) -> float:
        return self.g2 * self.p1

    @property
    def d1(self) -> float:
        # cubic form; the c2 expansion prints exponent 3/2 for the same symbol
        return (math.sqrt(self.g2) / (1.0 + self.g2 * self.p1)) ** 3

    @property
    def c0(self) -> float:
        return 62.0 * math.sqrt(2.0) * (math.sqrt(self.g2) * self.p1) ** 3 / math.sqrt(self.d1)

    def c1(self, p: float) -> float:
        return 128.0 * math.sqrt(2.0) * self.p1 / (math.sqrt(self.d1) * p ** (1.0 + self.a))

    def b0(self, n2: int, n1: int) -> float:
        """Berry-Esseen ratio bound."""
        p = n2 / n1
        return self.c0 / math.sqrt(n2) + self.c1(p) * n2 ** (self.a - 0.5)

    def b1(self, n2: int, n1: int) -> float:
        """Confusion-probability constant."""
        return 2.0 * (math.log(2.0) / math.sqrt(math.pi * self.d1 * n2) + self.b0(n2, n1))

    def c2(self, n1: int, n2: int) -> float:
        if self.violation == "delta":
            power_term = math.exp(-n2 * self.delta ** 2 / 4.0)
        else:
            power_term = math.exp(-n2 / 2.0)
        peak_term = math.exp(-(n1 ** (2.0 * self.a)) / (2.0 * self.p1) + math.log(2.0 * n1))
        return self.b0(n2, n1) + self.b1(n2, n1) + power_term + peak_term


@dataclass(frozen=True)
class DtBound:
    value: float
    q_term: float
    c2: float
    vacuous: bool


def dt_q_argument(log_m1, n1, n2, gamma):
    """Argument of the Q-function in the DT bound of the first SIC step."""
    d1, d2 = ed_denominators(gamma)
    num = d2 * n2 - 2.0 * (1.0 + gamma) * log_m1
    return num / (LOG2E * math.sqrt(4.0 * gamma + 2.0 * gamma * gamma) * math.sqrt(n1))


def dt_error_upper_bound(log_m1, n1, n2, gamma=None, consts: DtConstants | None = None) -> DtBound:
    """Upper bound on the average first-step SIC error with ``n2`` symbols.

    The bound is ``Q(r) + c2(n1, n2)``. Values above 1 are returned unchanged
    with ``vacuous=True``.
    """
    if consts is None:
        raise ValueError("DtConstants are required")
    if n2 > n1:
        raise ValueError("need n2 <= n1")
    if gamma is None:
        gamma = consts.gamma
    q_term = q_function(dt_q_argument(log_m1, n1, n2, gamma))
    c2 = consts.c2(n1, n2)
    value = q_term + c2
    return DtBound(value=value, q_term=q_term, c2=c2, vacuous=value > 1.0)


def info_density_symbol_stats(g2, p1, x):
    """Conditional mean and variance of one information-density term.

    For the first SIC step with equivalent gain ``g2`` and codeword power
    ``p1``, given the transmitted symbol ``x``. Works elementwise on arrays.
    """
    x = np.asarray(x, dtype=float)
    gamma = g2 * p1
    mean = capacity(gamma) + LOG2E * g2 * (x * x - p1) / (2.0 * (1.0 + gamma))
    var = (LOG2E / (1.0 + gamma)) ** 2 * g2 * (x * x + g2 * p1 * p1 / 2.0)
    if x.ndim == 0:
        return float(mean), float(var)
    return mean, var


def latency_table(h1, h2_values, p1, p2, eps, n1, backoff=0.0, eps_split=None):
    """Received-symbol counts with and without early decoding, per ``h2``.

    The weak user's code is sized for its own output SNR at blocklength
    ``n1``: ``log M1 = n1 * R(n1, SNR11, eps1)``. ED runs at the strong user
    with SNR ``SNR21``.

    Parameters
    ----------
    eps_split : tuple(float, float), optional
        ``(eps1, eps_sic1)``. Defaults to a third of ``eps`` each.

    Returns
    -------
    list of dict
        One row per ``h2``: ``no_ed`` (= ``n1``), ``ed_fbl`` (integer
        symbol requirement), ``ed_fbl_exact``, ``ed_asymptotic`` and the
        latency reduction ``n1 - ed_fbl``.
    """
    if eps_split is None:
        eps_split = (eps / 3.0, eps / 3.0)
    eps1, eps_sic1 = eps_split
    p1b, p2b = p1 - backoff, p2 - backoff
    snr11 = h1 * p1b / (1.0 + h1 * p2b)
    log_m1 = n1 * second_order_rate(n1, snr11, eps1)
    rows = []
    for h2 in np.atleast_1d(h2_values):
        h2 = float(h2)
        gamma = equivalent_sic_gain(h2, p2b) * p1b
        bound = ed_min_symbols(max(log_m1, 0.0), n1, gamma, eps_sic1)
        asym = n1 * capacity(snr11) / capacity(gamma)
        rows.append({
            "h2": h2,
            "gamma": gamma,
            "no_ed": n1,
            "ed_fbl_exact": bound.n_tilde_min,
            "ed_fbl": bound.n_required,
            "ed_asymptotic": asym,
            "latency_reduction": n1 - bound.n_required,
            "gap_to_asymptotic": bound.n_required - asym,
            "feasible": bound.feasible,
        })
    return rows
