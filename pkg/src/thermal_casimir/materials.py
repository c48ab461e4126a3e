"""Dielectric response models evaluated on the real and imaginary frequency axes.

All frequencies are angular frequencies in rad/s. On the imaginary axis the
models return the real function eps(i*xi); on the real axis they return the
complex eps(omega) in the e^{-i omega t} convention (Im eps >= 0 for lossy
media).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants

__all__ = [
    "Kind",
    "PermittivityModel",
    "ZeroFrequencySingular",
    "vacuum",
    "perfect_mirror",
    "constant",
    "drude",
    "gold",
    "intrinsic_silicon",
    "doped_silicon",
    "silicon_carrier_drude",
    "tabulated",
    "load_table",
    "eval_imag",
    "eval_real",
    "has_drude_term",
]


class ZeroFrequencySingular(ValueError):
    """Raised when a model with a free-carrier term is evaluated at xi = 0."""


class Kind(str, enum.Enum):
    VACUUM = "vacuum"
    DRUDE = "drude"
    TWO_OSCILLATOR = "two_oscillator"
    TABULATED = "tabulated"
    PERFECT_MIRROR = "perfect_mirror"


@dataclass(frozen=True)
class PermittivityModel:
    """Immutable description of a dielectric response.

    ``plasma_frequency`` and ``relaxation_rate`` parametrise the free-carrier
    (Drude) term of the DRUDE and TWO_OSCILLATOR kinds, and the low-frequency
    extrapolation of the TABULATED kind. ``table`` holds (omega, Im eps) rows.
    """

    kind: Kind
    plasma_frequency: float = 0.0
    relaxation_rate: float = 0.0
    eps_static: float = 1.0
    eps_infinity: float = 1.0
    resonance_frequency: float = 0.0
    table: tuple[tuple[float, float], ...] = field(default=(), repr=False)
    name: str = ""

    def __post_init__(self):
        values = (
            self.plasma_frequency,
            self.relaxation_rate,
            self.eps_static,
            self.eps_infinity,
            self.resonance_frequency,
        )
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite parameter in {self!r}")
        if self.plasma_frequency < 0 or self.relaxation_rate < 0:
            raise ValueError("plasma frequency and relaxation rate must be >= 0")
        if self.kind is Kind.TWO_OSCILLATOR:
            if self.eps_infinity < 1 or self.eps_static < self.eps_infinity:
                raise ValueError("need 1 <= eps_infinity <= eps_static")
            if self.eps_static > self.eps_infinity and self.resonance_frequency <= 0:
                raise ValueError("oscillator term needs resonance_frequency > 0")
        if self.kind is Kind.TABULATED:
            if len(self.table) < 2:
                raise ValueError("tabulated model needs at least two rows")
            w = np.array([row[0] for row in self.table])
            if np.any(w <= 0) or np.any(np.diff(w) <= 0):
                raise ValueError("table frequencies must be positive and ascending")

    @property
    def is_perfect_mirror(self) -> bool:
        return self.kind is Kind.PERFECT_MIRROR

    @property
    def _table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=float)


def has_drude_term(model: PermittivityModel) -> bool:
    """True if eps(i xi) diverges as xi -> 0."""
    if model.kind is Kind.TABULATED:
        return model.plasma_frequency > 0
    if model.kind in (Kind.DRUDE, Kind.TWO_OSCILLATOR):
        return model.plasma_frequency > 0
    return False


# ---------------------------------------------------------------- factories

def vacuum() -> PermittivityModel:
    return PermittivityModel(Kind.VACUUM, name="vacuum")


def perfect_mirror() -> PermittivityModel:
    """Ideal reflector: r_TE = -1 and r_TM = +1 exactly at every frequency."""
    return PermittivityModel(Kind.PERFECT_MIRROR, name="perfect mirror")


def constant(eps: float, name: str = "") -> PermittivityModel:
    """Lossless, dispersionless dielectric with permittivity ``eps``."""
    return PermittivityModel(
        Kind.TWO_OSCILLATOR, eps_static=eps, eps_infinity=eps, name=name or f"eps={eps:g}"
    )


def drude(plasma_frequency: float, relaxation_rate: float, name: str = "") -> PermittivityModel:
    return PermittivityModel(
        Kind.DRUDE,
        plasma_frequency=plasma_frequency,
        relaxation_rate=relaxation_rate,
        name=name or "drude",
    )


GOLD_PLASMA_FREQUENCY = 1.37e16  # rad/s, 9.0 eV
GOLD_RELAXATION_RATE = 4.05e13  # rad/s, 26.7 meV


def gold(plasma_frequency: float = GOLD_PLASMA_FREQUENCY,
         relaxation_rate: float = GOLD_RELAXATION_RATE) -> PermittivityModel:
    return drude(plasma_frequency, relaxation_rate, name="Au")


SILICON_EPS_STATIC = 11.87
SILICON_EPS_INFINITY = 1.035
SILICON_RESONANCE = 6.6e15  # rad/s

# n-type carriers at the doping level of the experiments
SILICON_DOPING = 2e18 * 1e6  # m^-3
SILICON_EFFECTIVE_MASS = 0.26  # conductivity mass, units of m_e
SILICON_MOBILITY = 0.011  # m^2/(V s), majority electrons at 2e18 cm^-3


def silicon_carrier_drude(density: float = SILICON_DOPING,
                          effective_mass: float = SILICON_EFFECTIVE_MASS,
                          mobility: float = SILICON_MOBILITY) -> tuple[float, float]:
    """Free-carrier (plasma frequency, relaxation rate) from doping data.

    Uses omega_p^2 = n e^2 / (eps_0 m*) and gamma = e / (m* mu). The result is
    a calibration input, not a measured value.
    """
    m = effective_mass * constants.m_e
    wp = math.sqrt(density * constants.e**2 / (constants.epsilon_0 * m))
    gamma = constants.e / (m * mobility)
    return wp, gamma


# Free-carrier plasma frequency fitted to the flat-plate thermal ratios at
# 600 nm and 1.2 um; the doping relation above gives 1.56e14 rad/s.
SILICON_PLASMA_FREQUENCY = 0.9e14  # rad/s


def intrinsic_silicon() -> PermittivityModel:
    return PermittivityModel(
        Kind.TWO_OSCILLATOR,
        eps_static=SILICON_EPS_STATIC,
        eps_infinity=SILICON_EPS_INFINITY,
        resonance_frequency=SILICON_RESONANCE,
        name="Si",
    )


def doped_silicon(plasma_frequency: float | None = None,
                  relaxation_rate: float | None = None) -> PermittivityModel:
    """Intrinsic silicon oscillator plus a free-carrier Drude term.

    Defaults: calibrated ``SILICON_PLASMA_FREQUENCY`` and the relaxation rate
    from ``silicon_carrier_drude``.
    """
    _, g0 = silicon_carrier_drude()
    wp0 = SILICON_PLASMA_FREQUENCY
    return PermittivityModel(
        Kind.TWO_OSCILLATOR,
        plasma_frequency=wp0 if plasma_frequency is None else plasma_frequency,
        relaxation_rate=g0 if relaxation_rate is None else relaxation_rate,
        eps_static=SILICON_EPS_STATIC,
        eps_infinity=SILICON_EPS_INFINITY,
        resonance_frequency=SILICON_RESONANCE,
        name="doped Si",
    )


def tabulated(rows, plasma_frequency: float, relaxation_rate: float,
              name: str = "tabulated") -> PermittivityModel:
    """Model defined by (omega, Im eps) rows with Drude extrapolation below them."""
    rows = tuple((float(w), float(v)) for w, v in rows)
    return PermittivityModel(
        Kind.TABULATED,
        plasma_frequency=plasma_frequency,
        relaxation_rate=relaxation_rate,
        table=rows,
        name=name,
    )


def load_table(path, plasma_frequency: float, relaxation_rate: float) -> PermittivityModel:
    """Read a two-column CSV of (omega [rad/s], Im eps); '#' starts a comment."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), 1):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: expected 'omega,Im eps'") from exc
    return tabulated(rows, plasma_frequency, relaxation_rate, name=Path(path).stem)


# --------------------------------------------------------------- evaluation

def _drude_imag(wp, gamma, xi):
    return wp**2 / (xi * (xi + gamma))


def _kk_drude_tail(wp, gamma, w_min, xi):
    # (2/pi) * int_0^{w_min} w Im eps_D(w) / (w^2 + xi^2) dw, closed form
    a = np.arctan(w_min / gamma) / gamma
    b = np.arctan(w_min / xi) / xi
    diff = xi**2 - gamma**2
    close = np.abs(diff) < 1e-6 * gamma**2
    safe = np.where(close, 1.0, diff)
    out = (a - b) / safe
    # xi ~ gamma: derivative of arctan(W/x)/x with respect to x^2
    lim = (np.arctan(w_min / gamma) / gamma + w_min / (w_min**2 + gamma**2)) / (2 * gamma**2)
    out = np.where(close, lim, out)
    return (2 / np.pi) * wp**2 * gamma * out


def _kk_table(table, xi):
    w, im = table[:, 0], table[:, 1]
    u = np.log(w)
    xi = np.atleast_1d(xi)
    # trapezoid in log(omega): integrand w^2 Im eps / (w^2 + xi^2)
    g = w[None, :] ** 2 * im[None, :] / (w[None, :] ** 2 + xi[:, None] ** 2)
    return (2 / np.pi) * np.trapezoid(g, u, axis=1)


def eval_imag(model: PermittivityModel, xi):
    """Permittivity eps(i xi) at imaginary frequency ``xi`` (rad/s).

    Accepts scalars or arrays. Perfect mirrors return ``inf``.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0) or np.any(~np.isfinite(xi_arr) & ~np.isposinf(xi_arr)):
        raise ValueError("imaginary frequency must be >= 0")
    if has_drude_term(model) and np.any(xi_arr == 0):
        raise ZeroFrequencySingular(f"{model.name or model.kind.value}: eps(i*0) diverges")

    kind = model.kind
    if kind is Kind.VACUUM:
        out = np.ones_like(xi_arr)
    elif kind is Kind.PERFECT_MIRROR:
        out = np.full_like(xi_arr, np.inf)
    elif kind is Kind.DRUDE:
        with np.errstate(over="ignore"):
            out = 1.0 + _drude_imag(model.plasma_frequency, model.relaxation_rate, xi_arr)
    elif kind is Kind.TWO_OSCILLATOR:
        out = np.full_like(xi_arr, model.eps_infinity)
        if model.eps_static != model.eps_infinity:
            w0 = model.resonance_frequency
            with np.errstate(over="ignore", invalid="ignore"):
                osc = (model.eps_static - model.eps_infinity) * w0**2 / (w0**2 + xi_arr**2)
            out = out + np.nan_to_num(osc, nan=0.0)
        if model.plasma_frequency > 0:
            with np.errstate(over="ignore"):
                out = out + _drude_imag(model.plasma_frequency, model.relaxation_rate, xi_arr)
    elif kind is Kind.TABULATED:
        table = model._table_array
        flat = xi_arr.reshape(-1)
        val = 1.0 + _kk_table(table, flat)
        if model.plasma_frequency > 0:
            val = val + _kk_drude_tail(
                model.plasma_frequency, model.relaxation_rate, table[0, 0], flat
            )
        out = val.reshape(xi_arr.shape)
    else:  # pragma: no cover
        raise ValueError(f"unknown kind {kind}")
    return out if out.ndim else float(out)


def eval_real(model: PermittivityModel, omega):
    """Complex permittivity eps(omega) on the real axis, Im eps >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("real frequency must be > 0")
    kind = model.kind
    if kind is Kind.VACUUM:
        out = np.ones_like(w, dtype=complex)
    elif kind is Kind.DRUDE:
        out = 1.0 - model.plasma_frequency**2 / (w * (w + 1j * model.relaxation_rate))
    elif kind is Kind.TWO_OSCILLATOR:
        out = np.full_like(w, model.eps_infinity, dtype=complex)
        if model.eps_static != model.eps_infinity:
            w0 = model.resonance_frequency
            out = out + (model.eps_static - model.eps_infinity) * w0**2 / (w0**2 - w**2)
        if model.plasma_frequency > 0:
            out = out - model.plasma_frequency**2 / (w * (w + 1j * model.relaxation_rate))
    else:
        raise ValueError(f"{kind.value} model has no real-frequency evaluation")
    return out if out.ndim else complex(out)
