"""
Early-decoding latency
======================

Received symbols the strong user needs before it can cancel the weak user's
message, as its channel improves.
"""

# %%
from hetbc.core import db_to_linear
from hetbc.ed import latency_table

eps = 2e-6
rows = latency_table(1.0, db_to_linear([0, 5, 10, 15.5]), 8.0, 0.2, eps, 2048,
                     backoff=0.002, eps_split=(eps / 3, eps / 3))

# %%
# ``ed_fbl`` is the finite-blocklength requirement, ``ed_asymptotic`` the
# capacity-ratio baseline. A requirement above the block length (negative
# savings) means the strong user cannot decode early at that gain.
print(f"{'h2':>8} {'no ED':>6} {'ED':>6} {'baseline':>9} {'saved':>6}")
for r in rows:
    print(f"{r['h2']:8.2f} {r['no_ed']:6d} {r['ed_fbl']:6d} {r['ed_asymptotic']:9.1f} {r['latency_reduction']:6d}")
