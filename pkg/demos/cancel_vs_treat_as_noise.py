"""
Cancelling vs treating interference as noise
============================================

Strong-user rate with early cancellation against decoding through the weak
user's signal, and the extra power the latter would need.
"""

# %%
from hetbc.core import db_to_linear
from hetbc.region import ed_tin_snr_gain_db

for h2_db in (10.0, 12.5, 15.5):
    g = ed_tin_snr_gain_db(1.0, db_to_linear(h2_db), 8.0, 0.2, 2e-6, 2048, axis="p2", backoff=0.002)
    print(f"h2={h2_db:5.1f} dB  n2={g['n2']:5d}  cancel={g['r_ed']:.4f}  noise={g['r_tin']:+.4f}  "
          f"extra power={g['gain_db']:.1f} dB")

# %%
# Moving the strong user's gain instead of its power never closes the gap:
# the treat-as-noise SNR saturates at the power ratio.
g = ed_tin_snr_gain_db(1.0, db_to_linear(15.5), 8.0, 0.2, 2e-6, 2048, axis="h2", backoff=0.002)
print(g["gain_db"])
