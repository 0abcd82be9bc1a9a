"""Finite-blocklength analysis of a two-user Gaussian broadcast channel whose
users have different blocklength constraints.

Modules
-------
core        Q-function, capacity, dispersion, second-order rate
ed          early-decoding symbol bound, DT error bound, latency tables
region      achievable rate pairs for ED, HNOMA and TIN
optimize    grid-search weighted sum-rate solvers and region tracing
montecarlo  random-codebook simulations of the decoders
cli         ``hetbc`` command-line tool
"""

from .core import (
    capacity,
    db_to_linear,
    dispersion,
    linear_to_db,
    q_function,
    q_inverse,
    second_order_rate,
)
from .ed import (
    ChannelConfig,
    DtConstants,
    EdBound,
    asymptotic_ed_fraction,
    dt_error_upper_bound,
    ed_min_symbols,
    latency_table,
)
from .optimize import (
    Solution,
    SolveSpec,
    SweepResult,
    solve,
    solve_p1_ipc,
    solve_p1_spc,
    solve_p2_ipc,
    solve_p2_spc,
    trace_rate_region,
)
from .region import (
    ErrorBudget,
    PowerAllocation,
    RatePoint,
    ed_region_ipc,
    ed_region_spc,
    hnoma_point,
    tin_rate_user2,
)

__version__ = "0.1.0"

__all__ = [
    "capacity", "db_to_linear", "dispersion", "linear_to_db", "q_function", "q_inverse",
    "second_order_rate", "ChannelConfig", "DtConstants", "EdBound", "asymptotic_ed_fraction",
    "dt_error_upper_bound", "ed_min_symbols", "latency_table", "Solution", "SolveSpec",
    "SweepResult", "solve", "solve_p1_ipc", "solve_p1_spc", "solve_p2_ipc", "solve_p2_spc",
    "trace_rate_region", "ErrorBudget", "PowerAllocation", "RatePoint", "ed_region_ipc",
    "ed_region_spc", "hnoma_point", "tin_rate_user2",
]
