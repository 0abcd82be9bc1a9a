"""
Finite-blocklength rate
=======================

How far the second-order rate sits below capacity for short blocks.
"""

# %%
# The backoff from capacity shrinks like one over the square root of the
# blocklength. At 2048 symbols and a one-in-a-million error target the
# penalty is still visible.
import numpy as np

from hetbc.core import capacity, second_order_rate

snr = 8.0
for n in (128, 512, 2048, 8192, 32768):
    r = second_order_rate(n, snr, 1e-6)
    print(f"n={n:6d}  rate={r:.4f}  capacity={capacity(snr):.4f}  gap={capacity(snr) - r:.4f}")

# %%
# An error target of one half removes the penalty entirely.
print(second_order_rate(np.array([10, 100, 1000]), snr, 0.5))
