"""
Reproduction number against infected mobility
=============================================

Scan d_I for the four models on the fig0a landscape and compare with
the small and large mobility limits.
"""

import numpy as np

from sislab import Grid, compute_r0, lambda_star, preset_fig0a, r0_limits
from sislab.svgplot import emit_svg

coeffs = preset_fig0a(Grid(400))
d_I = np.logspace(-3, 3, 25)

# R0 - 1 and the principal eigenvalue always carry opposite signs
curves = {}
for kind in ("MO", "MW", "SO", "SW"):
    r0 = np.array([compute_r0(kind, d, 1.0, coeffs).value for d in d_I])
    lam = lambda_star(kind, 1.0, 1.0, coeffs).eigenvalue
    low, high = r0_limits(kind, 1.0, coeffs)
    print(f"{kind}: R0 from {r0[0]:.4f} to {r0[-1]:.4f}  (limits {low:.4f}, {high:.4f});"
          f" lambda* at d_I = 1 is {lam:.4f}")
    curves[kind] = (np.log10(d_I), r0)

with open("r0_scan.svg", "w") as fh:
    fh.write(emit_svg(curves, title="R0 on fig0a, d_S = 1", xlabel="log10 d_I", ylabel="R0"))
print("wrote r0_scan.svg")
