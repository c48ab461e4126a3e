"""Shared setup for the demo scripts."""

import argparse

from thermal_casimir import engine, planar, rcwa
from thermal_casimir import materials as m

PERIOD = 400e-9


def quadrature(argv=None, description=""):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--quick", action="store_true", help="coarse settings, about 10x faster")
    args = ap.parse_args(argv)
    if args.quick:
        return engine.QuadratureSpec(N=6, kx_nodes=6, ky_nodes=12, xi_nodes=16)
    return engine.QuadratureSpec(N=12, kx_nodes=12, ky_nodes=24, xi_nodes=32, n_max_rule=1e-6)


def gold_plate():
    return planar.PlanarStack(m.gold())


def silicon_grating(depth, filling_factor=0.5):
    si = m.doped_silicon()
    return rcwa.GratingSpec(PERIOD, depth, filling_factor, si, si)
