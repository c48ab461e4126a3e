"""Deep-trench sample probed by a sphere.

The sample has d = 400 nm, a = 980 nm and f = 0.478. A sphere of radius
R = 150 um measures the force gradient, which within the sphere PFA is
2 pi R times the grating pressure; its ratio to the PFA gradient is eta_F.

The last block overlays the room-temperature curve on the synthetic points
in configs/synthetic_eta.csv to show the residual and chi^2 output. Those
points are made up for the demonstration.
"""

from pathlib import Path

from thermal_casimir import analysis as an
from thermal_casimir import engine

from _common import gold_plate, quadrature, silicon_grating

quad = quadrature(description=__doc__.splitlines()[0])
plate, sample = gold_plate(), silicon_grating(980e-9, 0.478)
R = 150e-6
Ls = (150e-9, 200e-9, 250e-9, 300e-9, 400e-9, 500e-9)

curves = {}
for T in (0.0, 300.0):
    print(f"\nT = {T:.0f} K")
    print(f"{'L (nm)':>8} {'dF/dL (N/m)':>12} {'eta_F':>7}")
    vals = []
    for L in Ls:
        p = engine.pressure(L, T, plate, sample, quad)
        g = an.sphere_gradient(p.pressure, L, R)
        e = an.eta_F(p, plate, sample).value
        vals.append(e)
        print(f"{L * 1e9:8.0f} {g.value:12.4e} {e:7.4f}")
    curves[T] = an.RatioCurve(Ls, vals, an.RatioKind.ETA_F, T)

csv_path = Path(__file__).resolve().parents[1] / "configs" / "synthetic_eta.csv"
ov = an.overlay_experiment(csv_path, curves[300.0])
print("\nsynthetic overlay at 300 K")
for r in ov.rows:
    print(f"  L = {r.L * 1e9:5.0f} nm  data {r.value:.3f} +- {r.sigma:.3f}  model {r.model:.3f}"
          f"  residual {r.residual:+.2f}")
print(f"  chi^2 = {ov.chi2:.2f}, reduced chi^2 = {ov.reduced_chi2:.2f} ({ov.n_used} points)")
