import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hetbc.core import (
    LOG2E,
    LOG2E_SQ,
    capacity,
    db_to_linear,
    dispersion,
    linear_to_db,
    q_function,
    q_inverse,
    rate_from_qinv,
    second_order_rate,
)

# Frozen from a 40-digit mpmath evaluation (erfc for the tail, findroot for
# its inverse, log for capacity); see the live cross-check further down.
Q_VALUES = {
    1.0: 0.15865525393145705141,
    3.0: 0.0013498980316300945267,
    8.0: 6.2209605742717841235e-16,
    -2.0: 0.9772498680518207928,
}
QINV_VALUES = {
    2e-6: 4.6113823623026683487,
    1e-12: 7.0344838253011319298,
    0.3: 0.52440051270804078404,
    1e-3: 3.0902323061678135415,
}
DISPERSION_1 = 1.0406844905028038989
DISPERSION_8 = 1.8501057608938735981
RATE_1024_8_2EM6 = 1.3889519569242545205
RATE_100_3_1EM3 = 0.61390311382717212347


@pytest.mark.parametrize("x,expected", Q_VALUES.items())
def test_q_function_frozen(x, expected):
    assert q_function(x) == pytest.approx(expected, rel=1e-13)


def test_q_function_zero_is_half():
    assert q_function(0.0) == 0.5


def test_q_function_deep_tail_stays_positive():
    # ndtr alone underflows to 0 here
    assert q_function(38.0) > 0.0
    assert q_function(38.0) == pytest.approx(float(mpmath.erfc(38 / mpmath.sqrt(2)) / 2), rel=1e-6)


@pytest.mark.parametrize("p,expected", QINV_VALUES.items())
def test_q_inverse_frozen(p, expected):
    assert q_inverse(p) == pytest.approx(expected, rel=1e-13)


def test_q_inverse_median_is_exactly_zero():
    assert q_inverse(0.5) == 0.0


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_q_inverse_rejects_outside_unit_interval(bad):
    with pytest.raises(ValueError):
        q_inverse(bad)


def test_q_inverse_live_mpmath_cross_check():
    mpmath.mp.dps = 30
    for p in np.geomspace(1e-15, 0.49, 25):
        ref = -mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(float(p)) - 1)
        assert q_inverse(p) == pytest.approx(float(ref), rel=1e-12, abs=1e-14)


def test_q_inverse_vectorized_shape_and_scalar_type():
    out = q_inverse(np.array([[0.1, 0.2], [0.3, 0.4]]))
    assert out.shape == (2, 2)
    assert isinstance(q_inverse(0.1), float)


@given(st.floats(min_value=1e-300, max_value=1 - 1e-16, exclude_max=True))
def test_q_inverse_round_trip(p):
    assert q_function(q_inverse(p)) == pytest.approx(p, rel=1e-12, abs=1e-300)


@given(st.floats(min_value=1e-200, max_value=0.5))
def test_q_inverse_symmetry(p):
    if 1.0 - p == 1.0:
        return
    # exact only when 1 - p is representable without rounding
    p = 1.0 - (1.0 - p)
    assert q_inverse(1.0 - p) == -q_inverse(p)


@given(st.floats(min_value=1e-12, max_value=0.999), st.floats(min_value=1e-12, max_value=0.999))
def test_q_inverse_is_decreasing(a, b):
    if a < b:
        assert q_inverse(a) >= q_inverse(b)


def test_capacity_trivial_values():
    assert capacity(0.0) == 0.0
    assert capacity(1.0) == pytest.approx(0.5, rel=1e-15)
    assert capacity(3.0) == pytest.approx(1.0, rel=1e-15)


def test_dispersion_values():
    assert dispersion(0.0) == 0.0
    assert dispersion(1.0) == pytest.approx(DISPERSION_1, rel=1e-14)
    assert dispersion(8.0) == pytest.approx(DISPERSION_8, rel=1e-14)
    assert dispersion(1e12) < LOG2E_SQ
    assert dispersion(1e12) == pytest.approx(LOG2E_SQ, rel=1e-11)
    assert LOG2E_SQ == pytest.approx(2.0813689810056077, rel=1e-15)


def test_second_order_rate_frozen():
    assert second_order_rate(1024, 8.0, 2e-6) == pytest.approx(RATE_1024_8_2EM6, rel=1e-13)
    assert second_order_rate(100, 3.0, 1e-3) == pytest.approx(RATE_100_3_1EM3, rel=1e-13)


@given(st.integers(1, 10**7), st.floats(0, 1e6))
def test_rate_at_half_error_is_capacity_exactly(n, snr):
    assert second_order_rate(n, snr, 0.5) == capacity(snr)


def test_rate_approaches_capacity_for_long_blocks():
    assert second_order_rate(10**14, 8.0, 1e-6) == pytest.approx(capacity(8.0), abs=1e-6)


def test_rate_rejects_zero_blocklength():
    with pytest.raises(ValueError):
        second_order_rate(0, 1.0, 0.1)


@given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(1e-3, 1e4), st.floats(1e-9, 0.49))
def test_rate_increases_with_blocklength_below_half(n_a, n_b, snr, eps):
    lo, hi = sorted((n_a, n_b))
    assert second_order_rate(lo, snr, eps) <= second_order_rate(hi, snr, eps)


@given(st.floats(1e-9, 0.999), st.floats(1e-9, 0.999), st.integers(1, 5000), st.floats(1e-3, 1e3))
def test_rate_increases_with_error_probability(e_a, e_b, n, snr):
    lo, hi = sorted((e_a, e_b))
    assert second_order_rate(n, snr, lo) <= second_order_rate(n, snr, hi)


def test_rate_from_qinv_matches():
    assert rate_from_qinv(512, 4.0, q_inverse(1e-4)) == second_order_rate(512, 4.0, 1e-4)


def test_rate_broadcasts():
    out = second_order_rate(np.array([100, 1000])[:, None], np.array([1.0, 10.0]), 1e-3)
    assert out.shape == (2, 2)


def test_db_round_trip():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert linear_to_db(db_to_linear(15.5)) == pytest.approx(15.5, rel=1e-14)
    assert LOG2E == pytest.approx(1.4426950408889634)
