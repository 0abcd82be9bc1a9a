"""Scalar numerics shared by every other module.

Gaussian tail functions, the AWGN capacity and dispersion, and the
parameterized second-order (normal approximation) rate. All functions accept
Python floats or numpy arrays and broadcast like numpy ufuncs. Rates are in
bits per channel use and are never clamped here.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

#: log2(e), the conversion factor between nats and bits.
LOG2E = 1.0 / math.log(2.0)
#: (log2 e)^2, the supremum of the Gaussian dispersion in bits^2.
LOG2E_SQ = LOG2E * LOG2E

_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010431025e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def q_function(x):
    """Standard normal tail probability ``Pr[N(0,1) > x]``."""
    x = np.asarray(x, dtype=float)
    q = special.ndtr(-x)
    # ndtr flushes to zero once the tail goes subnormal (x > ~37.5)
    under = (q == 0.0) & np.isfinite(x)
    if np.any(under):
        q = np.where(under, np.exp(special.log_ndtr(-x)), q)
    return _scalar_or_array(q)


def _acklam_lower(p):
    """Approximate Phi^{-1}(p); relative error about 1e-9."""
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log1p(-p[hi]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[hi] = -num / den
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        out[mid] = num / den
    return out


def q_inverse(p):
    """Inverse of :func:`q_function` on the open unit interval.

    A rational starting point is polished with Halley steps against
    ``q_function``, which brings the residual ``|Q(x) - p|`` below 1e-12 for
    every double in (0, 1).

    Raises
    ------
    ValueError
        If any ``p`` lies outside (0, 1) or is NaN.
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError(f"q_inverse requires 0 < p < 1, got {p!r}")
    flat = np.atleast_1d(p).astype(float)

    # Work on the lower tail min(p, 1 - p) and restore the sign at the end;
    # this keeps q_inverse(p) == -q_inverse(1 - p) exactly.
    upper = flat > 0.5
    tail = np.where(upper, 1.0 - flat, flat)
    x = -_acklam_lower(tail)  # x >= 0, Q(x) = tail
    for _ in range(2):
        err = special.ndtr(-x) - tail
        pdf = np.exp(-0.5 * x * x) / _SQRT2PI
        u = err / pdf
        x = x + u / (1.0 - 0.5 * x * u)
    x = np.where(tail == 0.5, 0.0, x)
    x = np.where(upper, -x, x)
    if np.ndim(p) == 0:
        return float(x[0])
    return x.reshape(p.shape)


def capacity(snr):
    """AWGN capacity ``0.5 * log2(1 + snr)`` in bits per channel use."""
    snr = np.asarray(snr, dtype=float)
    return _scalar_or_array(0.5 * LOG2E * np.log1p(snr))


def dispersion(snr):
    """Gaussian-input channel dispersion ``(log2 e)^2 * snr / (1 + snr)``."""
    snr = np.asarray(snr, dtype=float)
    return _scalar_or_array(LOG2E_SQ * snr / (1.0 + snr))


def second_order_rate(n, snr, eps):
    """Normal-approximation rate ``C(snr) - sqrt(V(snr)/n) * Q^{-1}(eps)``.

    Parameters
    ----------
    n : int or array
        Blocklength in channel uses, ``n >= 1``.
    snr : float or array
        Linear signal-to-noise ratio.
    eps : float or array
        Target block error probability in (0, 1).

    Returns
    -------
    float or ndarray
        Rate in bits per channel use. Can be negative.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("blocklength must be >= 1")
    snr = np.asarray(snr, dtype=float)
    qinv = np.asarray(q_inverse(eps))
    return _scalar_or_array(capacity(snr) - np.sqrt(dispersion(snr) / n) * qinv)


def rate_from_qinv(n, snr, qinv):
    """Same as :func:`second_order_rate` with ``Q^{-1}(eps)`` precomputed."""
    snr = np.asarray(snr, dtype=float)
    return _scalar_or_array(capacity(snr) - np.sqrt(dispersion(snr) / np.asarray(n, dtype=float)) * np.asarray(qinv))


def db_to_linear(db):
    return _scalar_or_array(10.0 ** (np.asarray(db, dtype=float) / 10.0))


def linear_to_db(x):
    return _scalar_or_array(10.0 * np.log10(np.asarray(x, dtype=float)))
