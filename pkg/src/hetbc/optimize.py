"""Grid-search solvers for the weighted sum-rate problems.

Four problems share one engine. HNOMA and ED are each solved under
individual (IPC) or sum (SPC) power constraints. The error-split grid uses
``eps_step`` (default ``eps/100``) on every free variable. In ``"equality"``
mode the last error probability is solved from the budget held with
equality. In ``"inequality"`` mode it gets its own grid axis and the budget
only has to hold as an inequality.

Every transcendental quantity (Q-inverse tables, capacities) is computed
once, before the grid is split into chunks. Chunks only combine the tables
with correctly-rounded arithmetic, so results are bit-identical however the
work is split across threads. Ties go to the lexicographically smallest
``(error-split indices, allocation index)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import LOG2E, capacity, dispersion, q_inverse
from .ed import ChannelConfig, ed_denominators
from .region import (
    BUDGET_TOL,
    ErrorBudget,
    PowerAllocation,
    RatePoint,
    ed_region_spc,
    hnoma_point,
    snr_set,
    weak_user_moments,
)

log = logging.getLogger(__name__)

#: Upper limit on grid points per solve, a guard against runaway inequality grids.
MAX_GRID_POINTS = 2_000_000_000


@dataclass(frozen=True)
class SolveSpec:
    """Everything a solver needs; see the module docstring for the grid."""

    cfg: ChannelConfig
    omega: float = 0.5
    scheme: str = "ED"
    power_mode: str = "IPC"
    eps_step: float | None = None
    power_grid: int = 32
    backoff_delta: float | None = None
    budget_mode: str = "equality"
    n_jobs: int = 1
    allocations: tuple | None = None

    def __post_init__(self):
        if not (0.0 <= self.omega <= 1.0):
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if self.scheme not in ("ED", "HNOMA"):
            raise ValueError(f"scheme must be ED or HNOMA, got {self.scheme!r}")
        if self.power_mode not in ("IPC", "SPC"):
            raise ValueError(f"power_mode must be IPC or SPC, got {self.power_mode!r}")
        if self.budget_mode not in ("equality", "inequality"):
            raise ValueError("budget_mode must be 'equality' or 'inequality'")
        if self.eps_step is not None and not (0.0 < self.eps_step < self.cfg.eps):
            raise ValueError("eps_step must lie in (0, eps)")
        if self.power_grid < 1:
            raise ValueError("power_grid must be >= 1")
        if self.power_mode == "IPC" and (self.cfg.p1 is None or self.cfg.p2 is None):
            raise ValueError("IPC solvers need cfg.p1 and cfg.p2")
        if self.power_mode == "SPC" and self.cfg.pt is None and self.allocations is None:
            raise ValueError("SPC solvers need cfg.pt")

    @property
    def step(self) -> float:
        return self.cfg.eps / 100.0 if self.eps_step is None else self.eps_step

    @property
    def delta(self) -> float:
        if self.backoff_delta is not None:
            return self.backoff_delta
        if self.power_mode == "IPC":
            return 0.01 * min(self.cfg.p1, self.cfg.p2)
        return 0.01 * self.cfg.pt

    @property
    def problem(self) -> str:
        return {"HNOMA": "p1", "ED": "p2"}[self.scheme] + "-" + self.power_mode.lower()


@dataclass(frozen=True)
class Solution:
    objective: float
    point: RatePoint
    budget: ErrorBudget | None
    allocation: PowerAllocation | None
    feasible: bool
    grid_size: int
    index: tuple | None = None

    def __iter__(self):
        # allows `obj, point, budget = solve_p1_ipc(spec)` style unpacking
        yield self.objective
        yield self.point
        yield self.budget
        if self.allocation is not None:
            yield self.allocation


def eps_levels(eps: float, step: float) -> np.ndarray:
    """Grid ``{step, 2 step, ...}`` strictly below ``eps``."""
    k = math.ceil(eps / step - 1e-9) - 1
    if k < 1:
        raise ValueError("eps_step too coarse: no grid point below eps")
    return step * np.arange(1, k + 1, dtype=float)


def spc_allocations(cfg: ChannelConfig, levels: int, delta: float = 0.0) -> list[PowerAllocation]:
    """Uniform grid over the sum-power simplex.

    The shares of ``pt`` spent on user 2, on the overlap segment and on the
    tail segment each take ``levels`` values in ``[0, 1]``. Combinations whose
    shares add up to at most one are kept. With ``levels == 1`` the single
    allocation splits the budget evenly.
    """
    p, pt = cfg.p, cfg.pt
    if levels == 1:
        fr = np.array([1.0 / 3.0])
    else:
        fr = np.linspace(0.0, 1.0, levels)
    tails = fr if p < 1.0 else np.array([0.0])
    out = []
    for x2 in fr:
        for x11 in fr:
            for x12 in tails:
                if x2 + x11 + x12 > 1.0 + 1e-12:
                    continue
                p12 = x12 * pt / (1.0 - p) if p < 1.0 else 0.0
                out.append(PowerAllocation(float(x11 * pt / p), float(p12), float(x2 * pt / p), delta))
    return out


def _allocations(spec: SolveSpec) -> list[PowerAllocation]:
    if spec.allocations is not None:
        return list(spec.allocations)
    if spec.power_mode == "IPC":
        return [PowerAllocation.from_ipc(spec.cfg, spec.delta)]
    return spc_allocations(spec.cfg, spec.power_grid, spec.delta)


def _rate_terms(n, snr):
    """``(C, sqrt(V/n))`` so that ``R = C - k * Q^{-1}(eps)``."""
    return capacity(snr), math.sqrt(dispersion(snr) / n)


class _Grid:
    """Error-split grid plus the Q-inverse tables shared by all chunks."""

    def __init__(self, spec: SolveSpec):
        eps, step = spec.cfg.eps, spec.step
        levels = eps_levels(eps, step)
        q = q_inverse(levels)
        self.levels = levels
        self.equality = spec.budget_mode == "equality"
        if spec.scheme == "ED":
            self.names = ("eps_sic1", "eps_sic2") + (() if self.equality else ("eps1",))
        else:
            self.names = ("eps_h11", "eps_h12", "eps_sic1") + (() if self.equality else ("eps_sic2",))
        self.shape = (len(levels),) * len(self.names)
        if int(np.prod(self.shape, dtype=np.int64)) > MAX_GRID_POINTS:
            raise ValueError(f"error grid of shape {self.shape} is too large; raise eps_step")
        self.q = q
        ax = [levels.reshape([-1 if i == j else 1 for j in range(len(self.shape))]) for i in range(len(self.shape))]

        if spec.scheme == "ED" and self.equality:
            a, b = ax
            dep = eps - (a + b - a * b)
            self.valid = dep > 0
            self.dep = np.where(self.valid, dep, 0.5)
            self.q_dep = q_inverse(self.dep)
        elif spec.scheme == "ED":
            a, b, c = ax
            self.valid = (a + b - a * b + c) <= eps + BUDGET_TOL
            self.dep = None
            self.q_dep = None
        elif self.equality:
            a, b, c = ax
            one_minus_d = (2.0 - eps - (1.0 - a) * (1.0 - b)) / (1.0 - c)
            dep = 1.0 - one_minus_d
            self.valid = (dep > 0) & (dep < 1)
            self.dep = np.where(self.valid, dep, 0.5)
            self.q_dep = q_inverse(self.dep)
        else:
            a, b, c, d = ax
            self.valid = (2.0 - (1.0 - a) * (1.0 - b) - (1.0 - c) * (1.0 - d)) <= eps + BUDGET_TOL
            self.dep = None
            self.q_dep = None

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def qaxis(self, i, sl):
        """Q-inverse table along axis ``i`` shaped for broadcasting over the chunk."""
        shape = [1] * len(self.shape)
        shape[i] = -1
        vals = self.q[sl] if i == 0 else self.q
        return vals.reshape(shape)

    def budget(self, idx) -> ErrorBudget:
        vals = {name: float(self.levels[i]) for name, i in zip(self.names, idx)}
        if self.equality:
            dep_name = "eps1" if "eps_sic2" in self.names else "eps_sic2"
            vals[dep_name] = float(self.dep[idx])
        return ErrorBudget(**vals)


def _ed_chunk(spec, grid, alloc, sl):
    cfg, w = spec.cfg, spec.omega
    n1, n2 = cfg.n1, cfg.n2
    mean, disp = weak_user_moments(cfg.h1, cfg.p, alloc.p11_bar, alloc.p12_bar, alloc.p2_bar)
    k1 = math.sqrt(disp / n1)
    c22, k22 = _rate_terms(n2, cfg.h2 * alloc.p2_bar)
    gamma = cfg.h2 * alloc.p11_bar / (1.0 + cfg.h2 * alloc.p2_bar)
    valid = grid.valid[sl]
    q_sic1 = grid.qaxis(0, sl)
    q_sic2 = grid.qaxis(1, sl)
    q_e1 = grid.q_dep[sl] if grid.equality else grid.qaxis(2, sl)
    r1 = mean - k1 * q_e1
    r2 = c22 - k22 * q_sic2
    r1c = np.maximum(r1, 0.0)
    if gamma > 0:
        d1, d2 = ed_denominators(gamma)
        spread = LOG2E * math.sqrt(4.0 * gamma + 2.0 * gamma * gamma)
        need = n1 * r1c / d1 + spread * q_sic1 * math.sqrt(n1) / d2
        feas = valid & (need <= n2)
    else:
        feas = np.zeros_like(valid)
    obj = w * r1c + (1.0 - w) * np.maximum(r2, 0.0)
    return np.broadcast_to(obj, valid.shape), feas


def _hnoma_chunk(spec, grid, alloc, sl):
    cfg, w = spec.cfg, spec.omega
    n1, n2, p = cfg.n1, cfg.n2, cfg.p
    snr11, snr21, snr12, snr22 = snr_set(cfg.h1, cfg.h2, alloc.p11_bar, alloc.p12_bar, alloc.p2_bar)
    c11, k11 = _rate_terms(n2, snr11)
    c21, k21 = _rate_terms(n2, snr21)
    c22, k22 = _rate_terms(n2, snr22)
    valid = grid.valid[sl]
    first = np.minimum(c11 - k11 * grid.qaxis(0, sl), c21 - k21 * grid.qaxis(2, sl))
    if n1 > n2:
        c12, k12 = _rate_terms(n1 - n2, snr12)
        r1 = p * first + (1.0 - p) * (c12 - k12 * grid.qaxis(1, sl))
    else:
        r1 = first
    q_sic2 = grid.q_dep[sl] if grid.equality else grid.qaxis(3, sl)
    r2 = c22 - k22 * q_sic2
    obj = w * np.maximum(r1, 0.0) + (1.0 - w) * np.maximum(r2, 0.0)
    return np.broadcast_to(obj, valid.shape), valid


def _best_in_chunk(spec, grid, alloc_idx, alloc, start, stop):
    sl = slice(start, stop)
    fn = _ed_chunk if spec.scheme == "ED" else _hnoma_chunk
    obj, feas = fn(spec, grid, alloc, sl)
    if not feas.any():
        return None
    masked = np.where(feas, obj, -np.inf)
    flat = int(np.argmax(masked))  # first maximum in C order
    local = np.unravel_index(flat, masked.shape)
    idx = (local[0] + start,) + tuple(int(i) for i in local[1:])
    return float(masked[local]), tuple(int(i) for i in idx), alloc_idx


def _better(a, b):
    """Deterministic reduction: larger objective, then smaller grid tuple."""
    if b is None:
        return a
    if a is None:
        return b
    if a[0] != b[0]:
        return a if a[0] > b[0] else b
    return a if (a[1], a[2]) <= (b[1], b[2]) else b


def solve(spec: SolveSpec) -> Solution:
    """Dispatch on ``spec.scheme`` and ``spec.power_mode``."""
    grid = _Grid(spec)
    allocs = _allocations(spec)
    n0 = grid.shape[0]
    chunk = max(1, n0 // max(1, 4 * spec.n_jobs)) if spec.n_jobs > 1 else n0
    jobs = [(i, a, s, min(s + chunk, n0)) for i, a in enumerate(allocs) for s in range(0, n0, chunk)]

    if spec.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=spec.n_jobs) as pool:
            results = list(pool.map(lambda j: _best_in_chunk(spec, grid, *j), jobs))
    else:
        results = [_best_in_chunk(spec, grid, *j) for j in jobs]

    best = None
    for r in results:
        best = _better(r, best)
    size = grid.size * len(allocs)
    if best is None:
        return Solution(0.0, RatePoint(0.0, 0.0, spec.scheme, False), None, None, False, size)

    obj, idx, ai = best
    budget = grid.budget(idx)
    alloc = allocs[ai]
    point = evaluate(spec, budget, alloc)
    return Solution(obj, point, budget, alloc if spec.power_mode == "SPC" else None, True, size, idx + (ai,))


def evaluate(spec: SolveSpec, budget: ErrorBudget, alloc: PowerAllocation) -> RatePoint:
    """Rate pair of one grid point through the scalar region functions."""
    cfg = spec.cfg
    if spec.power_mode == "SPC" and cfg.pt is None:
        # explicit allocations without a sum-power budget: check nothing
        cfg = cfg.replace(pt=alloc.spc_load(cfg.p))
    elif spec.power_mode == "IPC":
        cfg = cfg.replace(pt=alloc.spc_load(cfg.p))
    if spec.scheme == "ED":
        return ed_region_spc(cfg, budget, alloc)
    return hnoma_point(cfg, budget, alloc)


def objective(spec: SolveSpec, point: RatePoint) -> float:
    return spec.omega * point.r1 + (1.0 - spec.omega) * point.r2


def _check(spec, scheme, mode):
    if spec.scheme != scheme or spec.power_mode != mode:
        spec = replace(spec, scheme=scheme, power_mode=mode)
    return spec


def solve_p1_ipc(spec: SolveSpec) -> Solution:
    """Weighted sum rate of HNOMA under individual power constraints."""
    return solve(_check(spec, "HNOMA", "IPC"))


def solve_p2_ipc(spec: SolveSpec) -> Solution:
    """Weighted sum rate of ED under individual power constraints."""
    return solve(_check(spec, "ED", "IPC"))


def solve_p1_spc(spec: SolveSpec) -> Solution:
    """Weighted sum rate of HNOMA under the sum power constraint."""
    return solve(_check(spec, "HNOMA", "SPC"))


def solve_p2_spc(spec: SolveSpec) -> Solution:
    """Weighted sum rate of ED under the sum power constraint."""
    return solve(_check(spec, "ED", "SPC"))


# --------------------------------------------------------------------------
# sweeps and output
# --------------------------------------------------------------------------

def format_number(v) -> str:
    """12 significant digits, locale independent."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".12g")
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if not math.isfinite(v):
        return format_number(v)
    return float(format_number(v))


@dataclass
class SweepResult:
    """Tabular output of a solver sweep or a parameter scan."""

    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self) -> list:
        cols: list = []
        for r in self.rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        writer.writerow(cols)
        for r in self.rows:
            writer.writerow([format_number(r.get(c)) for c in cols])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_json(self, fh=None) -> str:
        data = [{k: _json_value(v) for k, v in r.items()} for r in self.rows]
        text = json.dumps(data, indent=1) + "\n"
        if fh is not None:
            fh.write(text)
        return text


def solution_row(spec: SolveSpec, sol: Solution, **extra) -> dict:
    """Flatten a solution together with its fully resolved inputs."""
    cfg = spec.cfg
    row = dict(extra)
    row.update({
        "problem": spec.problem,
        "scheme": spec.scheme,
        "power_mode": spec.power_mode,
        "omega": spec.omega,
        "h1": cfg.h1, "h2": cfg.h2, "n1": cfg.n1, "n2": cfg.n2, "eps": cfg.eps,
        "p1": cfg.p1, "p2": cfg.p2, "pt": cfg.pt,
        "eps_step": spec.step, "power_grid": spec.power_grid, "backoff": spec.delta,
        "budget_mode": spec.budget_mode,
        "feasible": sol.feasible,
        "objective": sol.objective,
        "r1": sol.point.r1, "r2": sol.point.r2,
    })
    for name in ("eps1", "eps_sic1", "eps_sic2", "eps_h11", "eps_h12"):
        row[name] = getattr(sol.budget, name) if sol.budget is not None else None
    alloc = sol.allocation
    for name in ("p11_bar", "p12_bar", "p2_bar"):
        row[name] = getattr(alloc, name) if alloc is not None else None
    return row


def sweep(template: SolveSpec, param: str, values) -> SweepResult:
    """Re-solve ``template`` with one channel or solver parameter swept.

    ``param`` is a :class:`ChannelConfig` field (e.g. ``"n2"``, ``"h2"``) or a
    :class:`SolveSpec` field (e.g. ``"omega"``).
    """
    t0 = time.perf_counter()
    rows = []
    cfg_fields = ChannelConfig.__dataclass_fields__
    for v in values:
        if param in cfg_fields:
            spec = replace(template, cfg=template.cfg.replace(**{param: v}))
        else:
            spec = replace(template, **{param: v})
        rows.append(solution_row(spec, solve(spec)))
    rows.sort(key=lambda r: r[param])
    meta = {
        "problem": template.problem, "swept": param,
        "wall_clock_s": time.perf_counter() - t0, "points": len(rows),
    }
    return SweepResult(rows, meta)


def pareto_filter(points):
    """Keep the (r1, r2) pairs not dominated by any other pair.

    Returns indices into ``points``. Exact duplicates keep their first
    occurrence.
    """
    keep = []
    for i, (a1, a2) in enumerate(points):
        dominated = False
        for j, (b1, b2) in enumerate(points):
            if j == i:
                continue
            if b1 >= a1 and b2 >= a2 and (b1 > a1 or b2 > a2 or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def trace_rate_region(template: SolveSpec, omega_count: int = 21, pareto: bool = True) -> SweepResult:
    """Trace a rate region by sweeping the weight over ``omega_count`` values.

    Infeasible weights are dropped and logged. With ``pareto=True`` only the
    upper-right staircase is kept.
    """
    if omega_count < 2:
        raise ValueError("omega_count must be >= 2")
    t0 = time.perf_counter()
    rows = []
    for w in np.linspace(0.0, 1.0, omega_count):
        spec = replace(template, omega=float(w))
        sol = solve(spec)
        if not sol.feasible:
            log.info("omega=%.4f infeasible for %s, point dropped", w, spec.problem)
            continue
        rows.append(solution_row(spec, sol))
    if pareto:
        keep = pareto_filter([(r["r1"], r["r2"]) for r in rows])
        rows = [rows[i] for i in keep]
    meta = {
        "problem": template.problem, "swept": "omega", "omega_count": omega_count,
        "wall_clock_s": time.perf_counter() - t0, "points": len(rows),
    }
    return SweepResult(rows, meta)
