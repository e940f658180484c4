"""
Limiting profiles as one mobility vanishes
==========================================

Continuation in d_S for MW approaches the closed form limit, and
continuation in d_I for SO approaches the piecewise profile.
"""

import numpy as np

from sislab import Grid, mw_limit_ds0, preset_fig0a, so_limit_peng, sweep

coeffs = preset_fig0a(Grid(400))
res = sweep("MW", "d_S_to_zero", coeffs, [10.0**-k for k in range(1, 7)], other=1.0)
lim = mw_limit_ds0(1.0, coeffs)
for d, r in zip(res.diffusivities, res.results):
    gap = max(np.abs(r.S - lim.S_limit).max(), np.abs(r.I - lim.I_limit).max())
    print(f"MW d_S = {d:.0e}: distance to limit {gap:.3e}")

res = sweep("SO", "d_I_to_zero", coeffs, [10.0 ** (-k / 2) for k in range(0, 13)], other=1e-3)
lim = so_limit_peng(0, coeffs)
r = res.results[-1]
print(f"SO d_I = {res.diffusivities[-1]:.0e}: relative gap in I "
      f"{np.abs(r.I - lim.I_limit).max() / lim.I_limit.max():.2%}")
