"""Flat gold plate against flat doped silicon, computed two ways.

The grating pipeline (scattering matrices, Bloch integration, Matsubara sum)
is run with zero trench depth and compared with a direct plane-plane
evaluation. Agreement at the 1e-5 level shows that the normalisation, the
zero-frequency term and the wavevector quadrature are consistent.
"""

import time

from thermal_casimir import engine, planar, rcwa
from thermal_casimir import materials as m

from _common import gold_plate, silicon_grating

quad = engine.QuadratureSpec(N=0, kx_nodes=24, ky_nodes=32, xi_nodes=32, n_max_rule=1e-7)
plate, flat = gold_plate(), silicon_grating(0.0)

print(f"{'L (nm)':>8} {'T (K)':>6} {'pipeline (Pa)':>15} {'plane-plane (Pa)':>17} {'rel diff':>9}")
for L in (150e-9, 300e-9, 600e-9, 1.2e-6):
    for T in (0.0, 300.0):
        t0 = time.time()
        p = engine.pressure(L, T, plate, flat, quad).pressure
        ref = planar.lifshitz_pressure(L, T, m.gold(), m.doped_silicon())
        print(f"{L * 1e9:8.0f} {T:6.0f} {p:15.6e} {ref:17.6e} {p / ref - 1:9.1e}"
              f"   ({time.time() - t0:.1f} s)")

# The same machinery with perfect mirrors gives the textbook T = 0 result.
pm = m.perfect_mirror()
mirror = rcwa.GratingSpec(400e-9, 0.0, 1.0, pm, pm)
p = engine.pressure(1e-6, 0.0, planar.PlanarStack(pm), mirror, quad).pressure
print(f"\nperfect mirrors at 1 um: {p:.6e} Pa vs ideal {planar.ideal_pressure(1e-6):.6e} Pa")
