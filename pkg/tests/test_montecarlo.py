import math

import numpy as np
import pytest
from scipy import stats

from hetbc.core import LOG2E, capacity
from hetbc.ed import ChannelConfig, ed_min_symbols, equivalent_sic_gain, info_density_symbol_stats
from hetbc.montecarlo import (
    GuardError,
    _densities,
    gen_codebook,
    info_density,
    simulate_cross_term,
    simulate_ed,
    symbol_density_samples,
    weak_user_total_moments,
    wilson_interval,
)

BACKOFF = (1.6, 0.04)  # a fifth of each user's power keeps remapping rare at n1 >= 256


def test_codebook_full_backoff_is_all_zero():
    cb = gen_codebook(8, 16, 2.0, 2.0, seed=1)
    assert not cb.symbols.any()


def test_codebook_is_reproducible():
    a = gen_codebook(50, 40, 3.0, 0.1, seed=7)
    b = gen_codebook(50, 40, 3.0, 0.1, seed=7)
    assert np.array_equal(a.symbols, b.symbols)
    assert not np.array_equal(a.symbols, gen_codebook(50, 40, 3.0, 0.1, seed=8).symbols)


def test_codebook_remap_fraction_matches_chi_square_tail():
    cb = gen_codebook(1000, 500, 8.0, 0.08, seed=3)
    expected = stats.chi2.sf(500 * 8.0 / 7.92, 500)  # about 0.43
    lo, hi = wilson_interval(cb.remapped, 1000, confidence=0.9999)
    assert lo <= expected <= hi
    norms = np.einsum("ij,ij->i", cb.symbols, cb.symbols)
    assert np.all(norms <= 500 * 8.0)
    assert np.count_nonzero(norms == 0.0) == cb.remapped


def test_codebook_validation():
    with pytest.raises(ValueError):
        gen_codebook(1, 10, 1.0)
    with pytest.raises(ValueError):
        gen_codebook(4, 10, 1.0, 2.0)


def test_density_of_zero_input_is_marginal_ratio_only():
    y = np.array([0.3, -1.2, 2.0])
    gain, power = 2.0, 1.5
    s = gain * power
    expected = sum(0.5 * math.log2(1 + s) + 0.5 * LOG2E * (v * v / (1 + s) - v * v) for v in y)
    assert info_density(np.zeros(3), y, gain, power) == pytest.approx(expected, rel=1e-14)


def test_noiseless_output_beats_capacity():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(200) * math.sqrt(4.0)
    dens = info_density(x, math.sqrt(3.0) * x, 3.0, 4.0)
    assert dens > 200 * capacity(12.0)


def test_matrix_densities_match_rowwise():
    rng = np.random.default_rng(1)
    cb = rng.standard_normal((6, 30))
    y = rng.standard_normal(30)
    rows = [info_density(c, y, 1.7, 0.9) for c in cb]
    np.testing.assert_allclose(_densities(cb, y, 1.7, 0.9), rows, rtol=1e-12, atol=1e-9)


def _cfg(**kw):
    base = dict(h1=1.0, h2=20.0, n1=400, n2=40, eps=0.1, p1=8.0, p2=0.2)
    base.update(kw)
    return ChannelConfig(**base)


def test_simulation_is_seed_deterministic():
    cfg = _cfg()
    a = simulate_ed(cfg, 16, 8, 30, trials=40, seed=5, backoff=BACKOFF)
    b = simulate_ed(cfg, 16, 8, 30, trials=40, seed=5, backoff=BACKOFF)
    assert a == b


def test_high_snr_small_codebooks_never_err():
    cfg = ChannelConfig(h1=1e6, h2=1e6, n1=64, n2=64, eps=0.1, p1=100.0, p2=0.01)
    rep = simulate_ed(cfg, 4, 4, trials=10_000, seed=2, backoff=(50.0, 0.005))
    assert rep.errors_step1 == rep.errors_step2 == rep.errors_weak == 0


def test_too_few_symbols_break_the_early_decode():
    cfg = _cfg()
    g2 = equivalent_sic_gain(20.0, 0.2 - BACKOFF[1])
    bound = ed_min_symbols(4.0, 400, g2 * (8.0 - BACKOFF[0]), 1e-2)
    short = max(1, bound.n_required // 8)
    rep = simulate_ed(cfg, 16, 8, short, trials=400, seed=9, backoff=BACKOFF)
    assert rep.empirical_eps["step1"][1] > 1e-2


def test_weak_user_density_mean_matches_two_segment_formula():
    cfg = _cfg(n1=512, n2=48)
    rep = simulate_ed(cfg, 8, 8, trials=3000, seed=4, backoff=BACKOFF)
    mean, var = weak_user_total_moments(cfg, BACKOFF)
    assert abs(rep.weak_density_mean - mean) <= 4 * math.sqrt(var / rep.trials)


def test_step_one_density_mean_matches_capacity():
    # halving user 2's power keeps its 48-symbol codewords from being remapped,
    # which would otherwise thin out the interference
    cfg = _cfg(n1=512, n2=48)
    rep = simulate_ed(cfg, 8, 8, trials=3000, seed=6, backoff=(1.6, 0.1))
    assert rep.remapped <= 5
    gamma = equivalent_sic_gain(20.0, 0.1) * 6.4
    disp = LOG2E ** 2 * gamma / (1 + gamma)
    assert abs(rep.density_mean - capacity(gamma)) <= 4 * math.sqrt(disp / (rep.trials * 48))


def test_guard_refuses_oversized_runs():
    with pytest.raises(GuardError):
        simulate_ed(_cfg(), 64, 4, 40, trials=10**8)


def test_simulation_validation():
    with pytest.raises(ValueError):
        simulate_ed(_cfg(), 16, 4, 41)
    with pytest.raises(ValueError):
        simulate_ed(_cfg(), 1, 4)
    with pytest.raises(ValueError):
        simulate_ed(_cfg(), 4, 4, backoff=(9.0, 0.0))


def test_report_fields_are_consistent():
    rep = simulate_ed(_cfg(), 16, 8, 30, trials=50, seed=1, backoff=BACKOFF)
    for k, (rate, lo, hi) in rep.empirical_eps.items():
        assert 0.0 <= lo <= rate <= hi <= 1.0
    assert rep.errors_step1 <= rep.trials and rep.errors_weak <= rep.trials
    d = rep.as_dict()
    assert d["eps_step1"] == rep.errors_step1 / rep.trials


def test_symbol_density_moments():
    g2 = equivalent_sic_gain(20.0, 0.2)
    for x in (0.0, 1.5, -3.0):
        w = symbol_density_samples(20.0, 8.0, 0.2, x, 200_000, seed=12)
        mean, var = info_density_symbol_stats(g2, 8.0, x)
        assert abs(w.mean() - mean) <= 4 * math.sqrt(var / w.size)
        assert w.var(ddof=1) == pytest.approx(var, rel=0.02)


def test_cross_term_limits():
    assert simulate_cross_term(50, 1.0, 1.0, 100.0, 10_000, seed=1).probability == 0.0
    half = simulate_cross_term(50, 1.0, 1.0, 0.0, 20_000, seed=1)
    assert half.low <= 0.5 <= half.high


def test_cross_term_below_bound_and_deterministic():
    a = simulate_cross_term(100, 8.0, 0.2, 0.5, 20_000, seed=4)
    assert a.within_bound and a.probability <= a.bound
    assert a == simulate_cross_term(100, 8.0, 0.2, 0.5, 20_000, seed=4)
    with pytest.raises(ValueError):
        simulate_cross_term(100, 8.0, 0.2, 0.5, 100)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
