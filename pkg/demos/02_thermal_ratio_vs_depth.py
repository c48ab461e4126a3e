"""Thermal ratio theta_F = F(300 K) / F(0 K) as the trenches deepen.

At fixed separation, cutting trenches into the silicon removes material
from the near field. The zero-temperature force drops faster than the
thermal part, so theta_F grows with depth and saturates once the trench
bottom is far away compared with L.

Run with --quick for a coarse pass.
"""

import time

import numpy as np

from thermal_casimir import analysis as an

from _common import gold_plate, quadrature, silicon_grating

quad = quadrature(description=__doc__.splitlines()[0])
plate = gold_plate()
depths = np.array([0.0, 100e-9, 250e-9, 500e-9, 900e-9, 1.4e-6])

for L in (600e-9, 1.2e-6):
    print(f"\nL = {L * 1e9:.0f} nm")
    print(f"{'a (nm)':>8} {'theta_F':>8} {'F(0 K) (Pa)':>13}")
    for a in depths:
        t0 = time.time()
        r = an.theta_F_at(L, plate, silicon_grating(a), quad)
        print(f"{a * 1e9:8.0f} {r.value:8.4f} {r.denominator:13.4e}   ({time.time() - t0:.0f} s)")
