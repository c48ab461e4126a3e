"""Thermal Casimir pressure between a planar mirror and a lamellar grating.

Grating reflection operators come from a Fourier modal (RCWA) solver at
imaginary frequency; the pressure is assembled from the round-trip
operator by a Matsubara sum (T > 0) or a frequency integral (T = 0).
"""

from . import analysis, engine, materials, planar, rcwa
from .analysis import eta_F, pfa_pressure, theta_F
from .engine import ForcePoint, QuadratureSpec, force_pressure, force_pressure_T0
from .materials import PermittivityModel
from .planar import PlanarStack, lifshitz_pressure
from .rcwa import GratingSpec, ScatterOperator

__version__ = "0.1.0"

__all__ = [
    "analysis", "engine", "materials", "planar", "rcwa",
    "ForcePoint", "GratingSpec", "PermittivityModel", "PlanarStack", "QuadratureSpec",
    "ScatterOperator", "eta_F", "force_pressure", "force_pressure_T0", "lifshitz_pressure",
    "pfa_pressure", "theta_F",
]
