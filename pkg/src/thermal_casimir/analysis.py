"""Derived quantities: PFA reference, thermal and geometry ratios, sweeps.

theta_F = F(L; T) / F(L; 0) measures the thermal enhancement and
eta_F = F(L; T) / F_PFA(L; T) the departure from the proximity force
approximation for the same temperature.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import engine
from .engine import ForcePoint, QuadratureSpec
from .planar import PlanarStack, lifshitz_pressure
from .rcwa import GratingSpec

GOLDEN = (math.sqrt(5) - 1) / 2
SPHERE_PFA_LIMIT = 0.05


class RatioKind(str, enum.Enum):
    THETA_F = "ThetaF"
    ETA_F = "EtaF"


class MismatchedSpecError(ValueError):
    """Numerator and denominator were computed with different settings."""


# ------------------------------------------------------------------ PFA

def pfa_pressure(L: float, T: float, plate: PlanarStack, grating: GratingSpec) -> float:
    """f F_pp(L) + (1 - f) F_pp(L + a) for the lamellar profile.

    Ridge tops face the plate across L, trench bottoms across L + a.
    """
    gap = plate.gap
    a, f = grating.depth, grating.filling_factor
    if a == 0:
        return lifshitz_pressure(L, T, plate.plate, grating.substrate, gap)
    top = lifshitz_pressure(L, T, plate.plate, grating.ridge, gap) if f > 0 else 0.0
    bottom = lifshitz_pressure(L + a, T, plate.plate, grating.substrate, gap) if f < 1 else 0.0
    return f * top + (1 - f) * bottom


# --------------------------------------------------------------- ratios

@dataclass(frozen=True)
class Ratio:
    value: float
    kind: RatioKind
    L: float
    T: float
    numerator: float
    denominator: float
    quad: QuadratureSpec | None = None


def theta_F(hot: ForcePoint, cold: ForcePoint) -> Ratio:
    """F(L; T) / F(L; 0) from two force points with identical settings."""
    if hot.quad != cold.quad:
        raise MismatchedSpecError("theta_F needs identical quadrature specs")
    if cold.T != 0 or not hot.T > 0:
        raise ValueError("theta_F needs a T > 0 numerator and a T = 0 denominator")
    if hot.L != cold.L:
        raise ValueError("theta_F needs equal separations")
    if cold.pressure == 0:
        raise ZeroDivisionError("zero T = 0 pressure")
    return Ratio(hot.pressure / cold.pressure, RatioKind.THETA_F, hot.L, hot.T,
                 hot.pressure, cold.pressure, hot.quad)


def eta_F(point: ForcePoint, plate: PlanarStack, grating: GratingSpec) -> Ratio:
    """F(L; T) / F_PFA(L; T)."""
    ref = pfa_pressure(point.L, point.T, plate, grating)
    if ref == 0:
        raise ZeroDivisionError("zero PFA pressure")
    return Ratio(point.pressure / ref, RatioKind.ETA_F, point.L, point.T,
                 point.pressure, ref, point.quad)


def theta_F_at(L: float, plate: PlanarStack, grating: GratingSpec,
               quad: QuadratureSpec | None = None, T: float = 300.0, threads: int = 1) -> Ratio:
    quad = quad or QuadratureSpec()
    hot = engine.force_pressure(L, T, plate, grating, quad, threads)
    cold = engine.force_pressure_T0(L, plate, grating, quad, threads)
    return theta_F(hot, cold)


def eta_F_at(L: float, T: float, plate: PlanarStack, grating: GratingSpec,
             quad: QuadratureSpec | None = None, threads: int = 1) -> Ratio:
    point = engine.pressure(L, T, plate, grating, quad or QuadratureSpec(), threads)
    return eta_F(point, plate, grating)


# ------------------------------------------------------------ L_max search

@dataclass(frozen=True)
class LMax:
    L_max: float
    eta_max: float
    bracket: tuple
    boundary: bool
    samples: tuple = ()

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]


def eta_max_locator(L_grid, T: float, plate: PlanarStack, grating: GratingSpec,
                    quad: QuadratureSpec | None = None, threads: int = 1,
                    rel_width: float = 0.02, eta=None) -> LMax:
    """Maximum of eta_F(L) at fixed depth: grid scan plus golden section.

    The golden-section search runs in log L inside the two grid cells around
    the best grid point until the bracket is narrower than ``rel_width``
    times L. A maximum on the grid edge is reported with ``boundary=True``.
    ``eta`` overrides the evaluator (a callable of L), mainly for tests.
    """
    quad = quad or QuadratureSpec()
    if eta is None:
        def eta(L):
            return eta_F_at(L, T, plate, grating, quad, threads).value
    grid = np.sort(np.asarray(L_grid, dtype=float))
    if grid.size < 3:
        raise ValueError("need at least three grid points")
    samples = [(float(L), float(eta(L))) for L in grid]
    vals = np.array([v for _, v in samples])
    i = int(np.argmax(vals))
    spread = np.ptp(vals)
    if i in (0, grid.size - 1) or spread <= 1e-12 * abs(vals[i]):
        return LMax(float(grid[i]), float(vals[i]), (float(grid[i]), float(grid[i])), True,
                    tuple(samples))
    lo, hi = math.log(grid[i - 1]), math.log(grid[i + 1])
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = eta(math.exp(x1)), eta(math.exp(x2))
    samples += [(math.exp(x1), f1), (math.exp(x2), f2)]
    while math.exp(hi) - math.exp(lo) > rel_width * math.exp(0.5 * (lo + hi)):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = eta(math.exp(x1))
            samples.append((math.exp(x1), f1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = eta(math.exp(x2))
            samples.append((math.exp(x2), f2))
    best_L, best = max(samples, key=lambda s: s[1])
    return LMax(best_L, best, (math.exp(lo), math.exp(hi)), False, tuple(samples))


# --------------------------------------------------------------- sphere

@dataclass(frozen=True)
class SphereGradient:
    L: float
    R: float
    value: float
    warning: str = ""


def sphere_gradient(pressure: float, L: float, R: float) -> SphereGradient:
    """Sphere-grating force gradient 2 pi R P (N/m) within the PFA for the sphere."""
    if not R > 0 or not L > 0:
        raise ValueError("L and R must be > 0")
    warn = ""
    if L / R > SPHERE_PFA_LIMIT:
        warn = f"L/R = {L / R:.3g} > {SPHERE_PFA_LIMIT}; sphere PFA strained"
    return SphereGradient(L, R, 2 * math.pi * R * pressure, warn)


def normalized_sphere_gradient(point: ForcePoint, plate: PlanarStack,
                               grating: GratingSpec) -> float:
    """dF/dL divided by its PFA value; R cancels and this equals eta_F."""
    return eta_F(point, plate, grating).value


# --------------------------------------------------------- sweeps/curves

@dataclass(frozen=True)
class SweepGrid:
    L_values: tuple
    a_values: tuple
    T_values: tuple
    period: float
    filling_factor: float

    def __post_init__(self):
        for name in ("L_values", "a_values", "T_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        if any(v <= 0 for v in self.L_values):
            raise ValueError("L values must be positive")
        if any(v < 0 for v in self.a_values) or any(v < 0 for v in self.T_values):
            raise ValueError("a and T values must be non-negative")
        if not self.period > 0 or not 0 <= self.filling_factor <= 1:
            raise ValueError("invalid period or filling factor")


@dataclass(frozen=True)
class RatioCurve:
    abscissa: tuple
    values: tuple
    kind: RatioKind
    T: float

    def __post_init__(self):
        x = tuple(float(v) for v in self.abscissa)
        y = tuple(float(v) for v in self.values)
        if len(x) != len(y):
            raise ValueError("abscissa and values differ in length")
        if any(v <= 0 for v in y):
            raise ValueError("ratio values must be positive")
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "values", y)
        object.__setattr__(self, "kind", RatioKind(self.kind))


@dataclass
class SweepResult:
    """Force points keyed by (L, a, T) plus the derived ratio rows."""

    points: dict = field(default_factory=dict)

    def theta(self, L, a):
        hot = [p for (l, d, t), p in self.points.items() if l == L and d == a and t > 0]
        return theta_F(hot[0], self.points[(L, a, 0.0)])


def run_sweep(grid: SweepGrid, plate: PlanarStack, template: GratingSpec,
              quad: QuadratureSpec | None = None, threads: int = 1,
              kind: RatioKind = RatioKind.THETA_F, progress=None):
    """Evaluate forces on the grid and return long-format ratio rows.

    Rows are dicts with L, a, T, value, pressure and reference. For theta_F
    a T = 0 denominator is added automatically and rows are emitted for the
    T > 0 entries; for eta_F every T gets a row. Forces are computed once per
    (L, a, T) in a fixed order.
    """
    quad = quad or QuadratureSpec()
    kind = RatioKind(kind)
    temps = list(grid.T_values)
    if kind is RatioKind.THETA_F and 0.0 not in temps:
        temps.append(0.0)
    result = SweepResult()
    rows = []
    for a in grid.a_values:
        g = replace(template, depth=a, period=grid.period, filling_factor=grid.filling_factor)
        for L in grid.L_values:
            for T in temps:
                p = engine.pressure(L, T, plate, g, quad, threads)
                result.points[(L, a, T)] = p
                if progress:
                    progress(L, a, T, p)
            for T in grid.T_values:
                p = result.points[(L, a, T)]
                if kind is RatioKind.THETA_F:
                    if T == 0:
                        continue
                    r = theta_F(p, result.points[(L, a, 0.0)])
                else:
                    r = eta_F(p, plate, g)
                rows.append({"L": L, "a": a, "T": T, "value": r.value,
                             "pressure": p.pressure, "reference": r.denominator, "point": p})
    return rows, result


# -------------------------------------------------------------- overlay

@dataclass(frozen=True)
class Residual:
    L: float
    value: float
    sigma: float
    model: float
    residual: float
    skipped: bool


@dataclass(frozen=True)
class Overlay:
    rows: tuple
    chi2: float
    reduced_chi2: float
    n_used: int


def read_experiment_csv(path):
    """Rows (L, value, sigma) from a CSV with header L_m,value,sigma."""
    out = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return out
    reader = csv.DictReader(lines)
    need = {"L_m", "value", "sigma"}
    if not need <= set(reader.fieldnames or ()):
        raise ValueError(f"CSV header must contain {sorted(need)}")
    for i, row in enumerate(reader, start=2):
        try:
            L, v, s = float(row["L_m"]), float(row["value"]), float(row["sigma"])
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad CSV row {i}: {row}") from exc
        if not s > 0:
            raise ValueError(f"row {i}: sigma must be > 0")
        out.append((L, v, s))
    return out


def overlay_experiment(csv_path, computed: RatioCurve) -> Overlay:
    """Residuals of measured points against a computed curve.

    The curve is interpolated with a monotone cubic in log L; points outside
    its range are flagged as skipped. reduced_chi2 = chi2 / n_used.
    """
    data = read_experiment_csv(csv_path)
    x = np.log(np.asarray(computed.abscissa))
    order = np.argsort(x)
    x, y = x[order], np.asarray(computed.values)[order]
    interp = PchipInterpolator(x, y) if x.size >= 2 else None
    rows, chi2, used = [], 0.0, 0
    for L, v, s in data:
        inside = interp is not None and L > 0 and x[0] <= math.log(L) <= x[-1]
        if not inside:
            rows.append(Residual(L, v, s, math.nan, math.nan, True))
            continue
        model = float(interp(math.log(L)))
        res = (v - model) / s
        chi2 += res**2
        used += 1
        rows.append(Residual(L, v, s, model, res, False))
    return Overlay(tuple(rows), chi2, chi2 / used if used else 0.0, used)
