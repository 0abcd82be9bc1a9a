"""
Rate regions under a shared power budget
========================================

Weighted-sum tracing of both schemes over a grid of power splits.
"""

# %%
from hetbc.ed import ChannelConfig
from hetbc.optimize import SolveSpec, trace_rate_region

cfg = ChannelConfig(h1=1.0, h2=50.0, n1=1024, n2=840, eps=2e-5, pt=10.0)

# %%
# Early decoding needs a fine allocation grid: on a coarse one the smallest
# nonzero strong-user share already makes the early decode impossible and the
# region shrinks to its r1 corner. The two-sub-block grid has an extra power
# axis, so it runs coarser to stay quick.
for scheme, levels in (("ED", 32), ("HNOMA", 8)):
    res = trace_rate_region(SolveSpec(cfg, scheme=scheme, power_mode="SPC", power_grid=levels), omega_count=6)
    print(scheme)
    for r in res.rows:
        print(f"  weight={r['omega']:.1f}  r1={r['r1']:.4f}  r2={r['r2']:.4f}")
