"""Where the exact force departs most from the proximity approximation.

eta_F = F / F_PFA compares the grating force with the area-weighted sum of
plane-plane forces at the ridge and trench distances. For a 900 nm deep
grating, eta_F(L) rises, peaks and falls back towards 1. The peak moves to
larger separations at room temperature, where the thermal n = 0 term makes
the interaction longer ranged.
"""

import numpy as np

from thermal_casimir import analysis as an

from _common import gold_plate, quadrature, silicon_grating

quad = quadrature(description=__doc__.splitlines()[0])
plate, grating = gold_plate(), silicon_grating(900e-9)
grid = np.geomspace(250e-9, 3e-6, 6)

for T in (0.0, 300.0):
    res = an.eta_max_locator(grid, T, plate, grating, quad, rel_width=0.05)
    print(f"\nT = {T:.0f} K")
    for L, v in sorted(res.samples):
        print(f"  L = {L * 1e9:7.1f} nm   eta_F = {v:.4f}")
    lo, hi = res.bracket
    print(f"  maximum eta_F = {res.eta_max:.4f} at L = {res.L_max * 1e9:.0f} nm "
          f"(bracket {lo * 1e9:.0f}-{hi * 1e9:.0f} nm, trench depth 900 nm)")
