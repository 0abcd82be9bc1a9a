"""Achievable rate pairs for the ED, HNOMA and TIN schemes.

Big-O corrections are dropped everywhere, so every rate here is a plain
normal-approximation expression. ``RatePoint`` clamps negative rates to zero
and keeps the raw values for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import (
    LOG2E_SQ,
    capacity,
    q_inverse,
    second_order_rate,
)
from .ed import ChannelConfig, ed_symbol_threshold

BUDGET_TOL = 1e-12

SCHEMES = ("ED", "HNOMA", "TIN")


@dataclass(frozen=True)
class ErrorBudget:
    """Split of the system error target across decoding steps.

    Unused entries stay ``None``: the ED scheme uses ``eps1``, ``eps_sic1``
    and ``eps_sic2``; HNOMA uses ``eps_h11``, ``eps_h12``, ``eps_sic1`` and
    ``eps_sic2``; TIN uses ``eps2``.
    """

    eps1: float | None = None
    eps_sic1: float | None = None
    eps_sic2: float | None = None
    eps_h11: float | None = None
    eps_h12: float | None = None
    eps2: float | None = None

    def __post_init__(self):
        for name in ("eps1", "eps_sic1", "eps_sic2", "eps_h11", "eps_h12", "eps2"):
            v = getattr(self, name)
            if v is not None and not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    def ed_total(self) -> float:
        a, b = self.eps_sic1, self.eps_sic2
        return a + b - a * b + self.eps1

    def hnoma_total(self) -> float:
        return (2.0 - (1.0 - self.eps_h11) * (1.0 - self.eps_h12)
                - (1.0 - self.eps_sic1) * (1.0 - self.eps_sic2))

    @classmethod
    def equal_ed(cls, eps: float) -> "ErrorBudget":
        """ED budget with ``eps1 = eps_sic1 = eps/3`` and ``eps_sic2`` solved to meet ``eps``."""
        a = eps / 3.0
        b = (eps - 2.0 * a) / (1.0 - a)
        return cls(eps1=a, eps_sic1=a, eps_sic2=b)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class PowerAllocation:
    """Backed-off powers for the overlap segment, the tail segment and user 2."""

    p11_bar: float
    p12_bar: float
    p2_bar: float
    delta: float = 0.0

    def __post_init__(self):
        if min(self.p11_bar, self.p12_bar, self.p2_bar, self.delta) < 0:
            raise ValueError("powers and backoff must be nonnegative")

    def spc_load(self, p: float) -> float:
        """Average transmit power ``p (P11 + P2) + (1 - p) P12``."""
        return p * self.p11_bar + (1.0 - p) * self.p12_bar + p * self.p2_bar

    def fits(self, pt: float, p: float, tol: float = BUDGET_TOL) -> bool:
        return self.spc_load(p) <= pt + tol

    @classmethod
    def from_ipc(cls, cfg: ChannelConfig, backoff: float = 0.0) -> "PowerAllocation":
        p1b, p2b = cfg.p1 - backoff, cfg.p2 - backoff
        return cls(p1b, p1b, p2b, backoff)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float
    scheme: str
    feasible: bool = True
    r1_raw: float = field(default=math.nan, compare=False)
    r2_raw: float = field(default=math.nan, compare=False)

    @classmethod
    def clamped(cls, r1, r2, scheme, feasible=True) -> "RatePoint":
        r1, r2 = float(r1), float(r2)
        return cls(max(r1, 0.0), max(r2, 0.0), scheme, feasible, r1, r2)

    @property
    def sum_rate(self) -> float:
        return self.r1 + self.r2


def snr_set_ipc(cfg: ChannelConfig, backoff: float = 0.0):
    """``(snr11, snr21, snr12, snr22)`` under individual power constraints."""
    if cfg.p1 is None or cfg.p2 is None:
        raise ValueError("IPC needs p1 and p2")
    if backoff < 0 or backoff >= min(cfg.p1, cfg.p2):
        raise ValueError(f"backoff must lie in [0, min(p1, p2)), got {backoff}")
    return snr_set(cfg.h1, cfg.h2, cfg.p1 - backoff, cfg.p1 - backoff, cfg.p2 - backoff)


def snr_set(h1, h2, p11_bar, p12_bar, p2_bar):
    """Same four SNRs for an arbitrary per-segment allocation."""
    snr11 = h1 * p11_bar / (1.0 + h1 * p2_bar)
    snr21 = h2 * p11_bar / (1.0 + h2 * p2_bar)
    snr12 = h1 * p12_bar
    snr22 = h2 * p2_bar
    return snr11, snr21, snr12, snr22


def weak_user_moments(h1, p, p11_bar, p12_bar, p2_bar):
    """Mean and dispersion per symbol of the weak user's two-segment density.

    The first fraction ``p`` of symbols sees user 2's signal as extra noise.
    The rest see only noise.
    """
    g1 = h1 / (1.0 + h1 * p2_bar)
    s_a, s_b = g1 * p11_bar, h1 * p12_bar
    mean = p * capacity(s_a) + (1.0 - p) * capacity(s_b)
    disp = LOG2E_SQ * (p * s_a / (1.0 + s_a) + (1.0 - p) * s_b / (1.0 + s_b))
    return mean, disp


def _ed_point(cfg: ChannelConfig, p11_bar, p12_bar, p2_bar, budget: ErrorBudget) -> RatePoint:
    n1, n2, p = cfg.n1, cfg.n2, cfg.p
    mean, disp = weak_user_moments(cfg.h1, p, p11_bar, p12_bar, p2_bar)
    r1 = mean - math.sqrt(disp / n1) * q_inverse(budget.eps1)
    r2 = second_order_rate(n2, cfg.h2 * p2_bar, budget.eps_sic2)
    gamma = cfg.h2 * p11_bar / (1.0 + cfg.h2 * p2_bar)
    if gamma <= 0:
        return RatePoint.clamped(r1, r2, "ED", feasible=False)
    need = ed_symbol_threshold(n1 * max(r1, 0.0), n1, gamma, q_inverse(budget.eps_sic1))
    return RatePoint.clamped(r1, r2, "ED", feasible=bool(need <= n2))


def _check_ed_budget(cfg, budget):
    if None in (budget.eps1, budget.eps_sic1, budget.eps_sic2):
        raise ValueError("ED budget needs eps1, eps_sic1 and eps_sic2")
    if budget.ed_total() > cfg.eps + BUDGET_TOL:
        raise ValueError(f"ED budget {budget.ed_total():.6g} exceeds eps={cfg.eps:.6g}")


def ed_region_ipc(cfg: ChannelConfig, budget: ErrorBudget, backoff: float = 0.0) -> RatePoint:
    """Corner point of the ED region under individual power constraints.

    ``r1`` is the weak user's second-order rate over its two-segment channel.
    ``r2`` is the strong user's rate after perfect SIC. The point is marked
    infeasible when ``n2`` symbols cannot carry the early decode of a
    ``n1 * r1``-bit message at ``eps_sic1``.
    """
    _check_ed_budget(cfg, budget)
    snr_set_ipc(cfg, backoff)  # validates the backoff
    p1b, p2b = cfg.p1 - backoff, cfg.p2 - backoff
    return _ed_point(cfg, p1b, p1b, p2b, budget)


def ed_region_spc(cfg: ChannelConfig, budget: ErrorBudget, alloc: PowerAllocation) -> RatePoint:
    """ED corner point under the sum power constraint.

    An allocation that breaks the power budget gives an infeasible point.
    """
    if cfg.pt is None:
        raise ValueError("SPC needs cfg.pt")
    _check_ed_budget(cfg, budget)
    point = _ed_point(cfg, alloc.p11_bar, alloc.p12_bar, alloc.p2_bar, budget)
    if not alloc.fits(cfg.pt, cfg.p):
        return RatePoint(point.r1, point.r2, "ED", False, point.r1_raw, point.r2_raw)
    return point


def hnoma_r1(n1, n2, snr11, snr21, snr12, eps_h11, eps_h12, eps_sic1):
    """Weak-user rate of hybrid NOMA (two sub-blocks, lengths ``n2`` and ``n1 - n2``).

    The first sub-block must also be decodable at the strong user within
    ``n2`` symbols, hence the minimum. With ``n1 == n2`` the second
    sub-block is empty and its term is dropped.
    """
    p = n2 / n1
    first = np.minimum(second_order_rate(n2, snr11, eps_h11), second_order_rate(n2, snr21, eps_sic1))
    if n1 == n2:
        return float(first) if np.ndim(first) == 0 else first
    out = p * first + (1.0 - p) * second_order_rate(n1 - n2, snr12, eps_h12)
    return float(out) if np.ndim(out) == 0 else out


def _check_hnoma_budget(cfg, budget):
    if None in (budget.eps_h11, budget.eps_h12, budget.eps_sic1, budget.eps_sic2):
        raise ValueError("HNOMA budget needs eps_h11, eps_h12, eps_sic1 and eps_sic2")
    if budget.hnoma_total() > cfg.eps + BUDGET_TOL:
        raise ValueError(f"HNOMA budget {budget.hnoma_total():.6g} exceeds eps={cfg.eps:.6g}")


def hnoma_point(cfg: ChannelConfig, budget: ErrorBudget, alloc: PowerAllocation) -> RatePoint:
    """HNOMA rate pair for an explicit per-segment allocation."""
    _check_hnoma_budget(cfg, budget)
    snr11, snr21, snr12, snr22 = snr_set(cfg.h1, cfg.h2, alloc.p11_bar, alloc.p12_bar, alloc.p2_bar)
    r1 = hnoma_r1(cfg.n1, cfg.n2, snr11, snr21, snr12, budget.eps_h11, budget.eps_h12, budget.eps_sic1)
    r2 = second_order_rate(cfg.n2, snr22, budget.eps_sic2)
    feasible = True if cfg.pt is None else alloc.fits(cfg.pt, cfg.p)
    return RatePoint.clamped(r1, r2, "HNOMA", feasible=bool(feasible))


def tin_rate_user2(n2, h2, p1, p2_bar, eps2):
    """Strong-user rate when user 1's signal is treated as noise.

    The same effective SNR ``h2 p2_bar / (1 + h2 p1)`` enters both the
    capacity and the dispersion term.
    """
    g2 = h2 / (1.0 + h2 * p1)
    return second_order_rate(n2, g2 * p2_bar, eps2)


def cross_term_tail(n2, delta, p11_bar, p2_bar):
    """Sub-exponential bound on ``Pr(sum_j X1j X2j >= n2 delta)``."""
    return math.exp(-n2 * delta * delta / (8.0 * p11_bar * p2_bar))


def chi2_upper_tail(k, excess):
    """Laurent-Massart bound on ``Pr(chi2_k - k >= excess)``.

    Inverts ``excess = 2 sqrt(k x) + 2 x`` for ``x`` and returns ``exp(-x)``;
    returns 1 for a nonpositive excess.
    """
    if excess <= 0 or k <= 0:
        return 1.0
    root = 0.5 * (-math.sqrt(k) + math.sqrt(k + 2.0 * excess))
    return math.exp(-root * root)


def spc_violation_bound(n1, n2, alloc: PowerAllocation):
    """Union bound on breaking the sum power constraint with the cross term.

    Adds the cross-term tail and one chi-square tail per energy sum. Each
    energy sum gets a margin of a third of the total backoff ``2 n2 delta``.
    The result is capped at 1.
    """
    delta = alloc.delta
    if delta <= 0:
        return 1.0
    total = 0.0
    if alloc.p11_bar > 0 and alloc.p2_bar > 0:
        total += cross_term_tail(n2, delta, alloc.p11_bar, alloc.p2_bar)
    shift = 2.0 * n2 * delta / 3.0
    segments = (
        (n2, alloc.p11_bar, n2 * delta),
        (n2, alloc.p2_bar, n2 * delta),
        (n1 - n2, alloc.p12_bar, (n1 - n2) * delta),
    )
    for k, pbar, nominal_gap in segments:
        if k == 0 or pbar == 0:
            continue
        # energy exceeds its nominal share minus the shift: chi2 excess in units of pbar
        total += chi2_upper_tail(k, (nominal_gap - shift) / pbar)
    return min(total, 1.0)


def ed_tin_snr_gain_db(h1, h2, p1, p2, eps, n1, axis="p2", backoff=0.0, eps_split=None):
    """Horizontal distance in dB between the ED and TIN strong-user rate curves.

    The strong user's blocklength is fixed at the ED symbol requirement of
    the operating point. ``r_ed = R(n2, h2 P2, eps_sic2)`` at that point.
    The function finds how far the chosen axis (``"p2"``: user 2's power,
    ``"h2"``: user 2's gain) must move for TIN, at ``eps2 = eps - eps1``, to
    reach the same rate.

    Returns
    -------
    dict
        ``n2``, ``r_ed``, ``r_tin`` (at the operating point) and ``gain_db``.
        ``gain_db`` is ``inf`` when no TIN operating point on that axis reaches
        ``r_ed``.
    """
    from .ed import latency_table

    if eps_split is None:
        eps_split = (eps / 3.0, eps / 3.0)
    eps1, eps_sic1 = eps_split
    eps_sic2 = (eps - eps1 - eps_sic1) / (1.0 - eps_sic1)
    eps2 = eps - eps1
    row = latency_table(h1, [h2], p1, p2, eps, n1, backoff, eps_split)[0]
    n2 = min(row["ed_fbl"], n1)
    p1b, p2b = p1 - backoff, p2 - backoff
    r_ed = second_order_rate(n2, h2 * p2b, eps_sic2)
    r_tin = tin_rate_user2(n2, h2, p1b, p2b, eps2)

    f = lambda s: second_order_rate(n2, s, eps2) - r_ed  # noqa: E731
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    s_star = brentq(f, 1e-300, hi, xtol=1e-15, rtol=1e-14)
    if axis == "p2":
        # TIN SNR is h2 P2' / (1 + h2 P1): linear in P2'
        p2_needed = s_star * (1.0 + h2 * p1b) / h2
        gain = 10.0 * math.log10(p2_needed / p2b)
    elif axis == "h2":
        ceiling = p2b / p1b
        if s_star >= ceiling:
            gain = math.inf
        else:
            h2_needed = s_star / (p2b - s_star * p1b)
            gain = 10.0 * math.log10(h2_needed / h2)
    else:
        raise ValueError("axis must be 'p2' or 'h2'")
    return {"n2": n2, "r_ed": r_ed, "r_tin": r_tin, "snr_needed": s_star, "gain_db": gain}
