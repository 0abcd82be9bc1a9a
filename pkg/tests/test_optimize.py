import csv
import io
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grid_oracle import brute_force, close
from hetbc.ed import ChannelConfig
from hetbc.optimize import (
    SolveSpec,
    SweepResult,
    eps_levels,
    format_number,
    pareto_filter,
    solve,
    solve_p1_ipc,
    solve_p1_spc,
    solve_p2_ipc,
    solve_p2_spc,
    spc_allocations,
    sweep,
    trace_rate_region,
)
from hetbc.region import PowerAllocation

IPC = ChannelConfig(h1=1.0, h2=20.0, n1=1024, n2=900, eps=2e-6, p1=8.0, p2=0.2)
SPC = ChannelConfig(h1=1.0, h2=50.0, n1=1024, n2=840, eps=2e-5, pt=10.0)


def test_eps_levels():
    lv = eps_levels(1.0, 0.25)
    assert list(lv) == [0.25, 0.5, 0.75]
    assert len(eps_levels(2e-6, 2e-8)) == 99
    with pytest.raises(ValueError):
        eps_levels(1.0, 1.0)


def test_spc_allocations_respect_power_budget():
    allocs = spc_allocations(SPC, 6)
    assert all(a.fits(SPC.pt, SPC.p) for a in allocs)
    assert len(allocs) == 56  # compositions of 5 into 4 parts
    assert max(a.p2_bar for a in allocs) == pytest.approx(SPC.pt / SPC.p)


def test_spec_validation():
    with pytest.raises(ValueError):
        SolveSpec(IPC, omega=1.5)
    with pytest.raises(ValueError):
        SolveSpec(IPC, scheme="TDMA")
    with pytest.raises(ValueError):
        SolveSpec(IPC, power_mode="SPC")
    with pytest.raises(ValueError):
        SolveSpec(IPC, eps_step=1.0)
    assert SolveSpec(IPC).step == pytest.approx(2e-8)
    assert SolveSpec(IPC).delta == pytest.approx(0.002)


@pytest.mark.parametrize("scheme", ["ED", "HNOMA"])
@pytest.mark.parametrize("mode", ["IPC", "SPC"])
@pytest.mark.parametrize("budget_mode", ["equality", "inequality"])
def test_solver_matches_exhaustive_enumeration(scheme, mode, budget_mode):
    cfg = IPC if mode == "IPC" else SPC
    spec = SolveSpec(cfg, omega=0.6, scheme=scheme, power_mode=mode, eps_step=cfg.eps / 7,
                     power_grid=4, budget_mode=budget_mode)
    sol = solve(spec)
    ref = brute_force(spec)
    if ref is None:
        assert not sol.feasible and sol.objective == 0.0
    else:
        assert sol.feasible
        assert close(sol.objective, ref)


def test_reported_point_reproduces_objective():
    spec = SolveSpec(SPC, omega=0.4, scheme="HNOMA", power_mode="SPC", eps_step=SPC.eps / 10, power_grid=5)
    sol = solve(spec)
    assert close(spec.omega * sol.point.r1 + (1 - spec.omega) * sol.point.r2, sol.objective)
    assert sol.budget.hnoma_total() == pytest.approx(SPC.eps, rel=1e-9)


def test_parallel_runs_are_bit_identical():
    spec = SolveSpec(SPC, omega=0.5, scheme="HNOMA", power_mode="SPC", eps_step=SPC.eps / 20, power_grid=4)
    ref = solve(spec)
    for jobs in (2, 3, 3, 5):
        sol = solve(replace(spec, n_jobs=jobs))
        assert sol.objective == ref.objective
        assert sol.index == ref.index
        assert sol.budget == ref.budget and sol.allocation == ref.allocation


def test_named_solvers_dispatch():
    spec = SolveSpec(IPC, eps_step=IPC.eps / 10)
    assert solve_p1_ipc(spec).point.scheme == "HNOMA"
    assert solve_p2_ipc(spec).point.scheme == "ED"
    sspec = SolveSpec(SPC, power_mode="SPC", eps_step=SPC.eps / 5, power_grid=3)
    assert solve_p1_spc(sspec).allocation is not None
    assert solve_p2_spc(sspec).point.scheme == "ED"


def test_zero_weight_pushes_last_sic_error_to_grid_maximum():
    spec = SolveSpec(IPC, omega=0.0, scheme="HNOMA", eps_step=IPC.eps / 20)
    sol = solve(spec)
    step = spec.step
    eps = IPC.eps
    best = 1 - (2 - eps - (1 - step) ** 2) / (1 - step)
    assert sol.budget.eps_sic2 == pytest.approx(best, rel=1e-9)


def test_zero_weight_sum_power_puts_everything_on_strong_user():
    spec = SolveSpec(SPC, omega=0.0, scheme="HNOMA", power_mode="SPC", eps_step=SPC.eps / 5, power_grid=5)
    sol = solve(spec)
    assert sol.allocation.p2_bar == pytest.approx(SPC.pt / SPC.p)


def test_early_decoding_feasibility_is_monotone_in_n2():
    # a longer strong-user block both adds symbols and lowers the weak
    # user's rate, so once feasible it stays feasible
    spec = SolveSpec(IPC, scheme="ED", eps_step=IPC.eps / 20)
    flags = [solve(replace(spec, cfg=IPC.replace(n2=n2))).feasible for n2 in range(640, 1025, 32)]
    assert flags[-1]
    first = flags.index(True)
    assert all(flags[first:])


def test_weak_strong_user_makes_early_decoding_infeasible():
    cfg = IPC.replace(h1=1e-3, h2=1e-3)
    sol = solve(SolveSpec(cfg, scheme="ED", eps_step=cfg.eps / 10))
    assert not sol.feasible and sol.objective == 0.0
    assert sol.budget is None


def test_collapsed_sum_power_grid_equals_individual():
    for scheme in ("ED", "HNOMA"):
        spec = SolveSpec(IPC, scheme=scheme, eps_step=IPC.eps / 25)
        ipc = solve(spec)
        alloc = PowerAllocation.from_ipc(IPC, spec.delta)
        spc = solve(replace(spec, power_mode="SPC", allocations=(alloc,)))
        assert abs(spc.objective - ipc.objective) <= 1e-12
        assert spc.point.r1 == ipc.point.r1 and spc.point.r2 == ipc.point.r2


def test_trace_with_two_weights_gives_the_corners():
    spec = SolveSpec(IPC.replace(n2=1024), scheme="HNOMA", eps_step=IPC.eps / 10)
    res = trace_rate_region(spec, 2, pareto=False)
    assert [r["omega"] for r in res.rows] == [0.0, 1.0]
    r2_best = solve(replace(spec, omega=0.0)).objective
    r1_best = solve(replace(spec, omega=1.0)).objective
    assert res.rows[0]["r2"] == pytest.approx(r2_best)
    assert res.rows[1]["r1"] == pytest.approx(r1_best)
    with pytest.raises(ValueError):
        trace_rate_region(spec, 1)


def test_sweep_rows_sorted_and_complete():
    spec = SolveSpec(IPC, scheme="ED", eps_step=IPC.eps / 10)
    res = sweep(spec, "n2", [1024, 700, 900])
    assert [r["n2"] for r in res.rows] == [700, 900, 1024]
    for key in ("h1", "h2", "n1", "eps", "p1", "p2", "omega", "eps_step", "backoff", "feasible", "objective"):
        assert key in res.rows[0]
    assert res.metadata["points"] == 3


points = st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=30)


@given(points)
def test_pareto_filter_keeps_exactly_the_undominated(pts):
    keep = set(pareto_filter(pts))
    for i in keep:
        for j, q in enumerate(pts):
            if j != i:
                assert not (q[0] >= pts[i][0] and q[1] >= pts[i][1] and q != pts[i])
    for i, p in enumerate(pts):
        if i not in keep:
            assert any(pts[j][0] >= p[0] and pts[j][1] >= p[1] for j in keep)


def test_format_number():
    assert format_number(1 / 3) == "0.333333333333"
    assert format_number(2e-6) == "2e-06"
    assert format_number(True) == "true"
    assert format_number(None) == ""
    assert format_number(float("inf")) == "inf"
    assert format_number(np.int64(7)) == "7"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=8))
def test_csv_and_json_are_value_identical(vals):
    res = SweepResult([{"i": i, "x": v, "ok": v > 0} for i, v in enumerate(vals)])
    parsed_csv = list(csv.DictReader(io.StringIO(res.to_csv())))
    parsed_json = json.loads(res.to_json())
    for a, b in zip(parsed_csv, parsed_json):
        assert int(a["i"]) == b["i"]
        assert float(a["x"]) == b["x"]
        assert (a["ok"] == "true") == b["ok"]
