"""Planar reflectors: Fresnel operators, translation, Lifshitz pressure.

The plate faces the grating across the gap medium. Its reflection is
diagonal in the TE/TM basis; :func:`plate_operator` re-expresses it in the
(E_y, H_y) amplitude basis used by :mod:`thermal_casimir.rcwa` so the two
scatterers can be multiplied together.

Pressures are returned positive for attraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants, integrate

from . import materials as mat
from .materials import PermittivityModel

C = constants.c
HBAR = constants.hbar
KB = constants.k

# imaginary frequency used for n = 0 when the exact limit is switched off
SMALL_XI = 1e8


@dataclass(frozen=True)
class PlanarStack:
    """A semi-infinite plate (``plate``) seen across ``gap``."""

    plate: PermittivityModel
    gap: PermittivityModel = field(default_factory=mat.vacuum)

    def __post_init__(self):
        if self.gap.is_perfect_mirror:
            raise ValueError("gap medium cannot be a perfect mirror")


# ---------------------------------------------------------------- Fresnel

def fresnel_coefficients(eps_gap, eps_plate, kappa_gap, kappa_plate):
    """(r_TE, r_TM) at imaginary frequency from permittivities and kappas."""
    r_te = (kappa_gap - kappa_plate) / (kappa_gap + kappa_plate)
    r_tm = (eps_plate * kappa_gap - eps_gap * kappa_plate) / (
        eps_plate * kappa_gap + eps_gap * kappa_plate
    )
    return r_te, r_tm


def zero_frequency_fresnel(plate: PermittivityModel, gap: PermittivityModel):
    """Exact xi -> 0+ limits (r_TE, r_TM), independent of the wavevector.

    For any medium eps * xi^2 -> 0, so kappa_plate -> kappa and r_TE -> 0;
    free-carrier media have eps -> infinity and r_TM -> 1.
    """
    if plate.is_perfect_mirror:
        return -1.0, 1.0
    if mat.has_drude_term(plate):
        return 0.0, 1.0
    eg = _static_eps(gap)
    ep = _static_eps(plate)
    return 0.0, (ep - eg) / (ep + eg)


def _static_eps(model):
    if mat.has_drude_term(model):
        return math.inf
    return float(mat.eval_imag(model, 0.0))


def reflection_te_tm(plate: PermittivityModel, gap: PermittivityModel, xi, q2,
                     zero_mode: str = "limit"):
    """(r_TE, r_TM) for in-plane wavevector squared ``q2`` at frequency ``xi``.

    ``xi`` is a scalar; ``q2`` broadcasts. ``zero_mode`` selects the exact
    limit ("limit") or evaluation at SMALL_XI ("small_xi") when xi == 0.
    """
    q2 = np.asarray(q2, dtype=float)
    if plate.is_perfect_mirror:
        return np.full(q2.shape, -1.0), np.full(q2.shape, 1.0)
    if xi == 0:
        if zero_mode == "limit":
            rte, rtm = zero_frequency_fresnel(plate, gap)
            return np.full(q2.shape, rte), np.full(q2.shape, rtm)
        xi = SMALL_XI
    eg = mat.eval_imag(gap, xi)
    ep = mat.eval_imag(plate, xi)
    kg = np.sqrt(eg * xi**2 / C**2 + q2)
    kp = np.sqrt(ep * xi**2 / C**2 + q2)
    return fresnel_coefficients(eg, ep, kg, kp)


def _kappa(eps_gap, xi, alpha, ky):
    ky = np.asarray(ky, dtype=float)
    return np.sqrt(eps_gap * xi**2 / C**2 + alpha**2 + ky[..., None] ** 2)


def fresnel_operator(stack: PlanarStack, xi: float, kx: float, ky, N: int, period: float,
                     zero_mode: str = "limit"):
    """Diagonal plate operator diag(r_TE(orders), r_TM(orders)).

    Returns an array of shape (..., 2(2N+1)) holding the diagonal (the full
    matrix is ``np.diag`` of it) in the TE/TM basis.
    """
    from .rcwa import bloch_alpha

    alpha = bloch_alpha(kx, period, N)
    ky = np.asarray(ky, dtype=float)
    q2 = alpha**2 + ky[..., None] ** 2
    rte, rtm = reflection_te_tm(stack.plate, stack.gap, xi, q2, zero_mode)
    return np.concatenate([rte, rtm], axis=-1)


def te_tm_to_yfield(r_te, r_tm, eps_gap, alpha, u, towards: str):
    """Planar reflection in the (E_y, H_y) basis from TE/TM coefficients.

    ``u`` = ky * kz / k0 of the gap medium; ``towards`` is "down" for a wave
    reflected back towards -z (the plate) and "up" for reflection towards +z
    (a lower interface). The result is (..., 2n, 2n).

    With v = 1/u the same matrix is evaluated in the form that stays finite
    as k0 -> 0 (u -> infinity), selected per element.
    """
    alpha = np.broadcast_to(alpha, np.shape(u))
    sgn = -1.0 if towards == "up" else 1.0
    big = np.abs(u) > np.abs(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        # u-form
        den_u = alpha**2 + u**2 / eps_gap
        ee_u = (r_te * alpha**2 - r_tm * u**2 / eps_gap) / den_u
        hh_u = (r_tm * alpha**2 - r_te * u**2 / eps_gap) / den_u
        off_u = alpha * u * (r_te + r_tm) / den_u
        # v-form
        v = 1.0 / u
        den_v = alpha**2 * v**2 + 1.0 / eps_gap
        ee_v = (r_te * alpha**2 * v**2 - r_tm / eps_gap) / den_v
        hh_v = (r_tm * alpha**2 * v**2 - r_te / eps_gap) / den_v
        off_v = alpha * v * (r_te + r_tm) / den_v
    ee = np.where(big, ee_v, ee_u)
    hh = np.where(big, hh_v, hh_u)
    off = np.where(big, off_v, off_u)
    eh = sgn * off / eps_gap
    he = -sgn * off
    n = alpha.shape[-1]
    out = np.zeros(np.shape(u)[:-1] + (2 * n, 2 * n), dtype=np.result_type(ee, complex))
    idx = np.arange(n)
    out[..., idx, idx] = ee
    out[..., idx, n + idx] = eh
    out[..., n + idx, idx] = he
    out[..., n + idx, n + idx] = hh
    return out


def _u_imag(eps_gap, xi, alpha, ky):
    """u = ky kz / k0 at imaginary frequency (real; infinite at xi = 0)."""
    kyb = np.asarray(ky, dtype=float)[..., None]
    kap = _kappa(eps_gap, xi, alpha, ky)
    if xi == 0:
        return np.where(kyb == 0, 0.0, np.copysign(np.inf, kyb)) * np.ones_like(kap)
    return kyb * kap * C / xi


def plate_operator(stack: PlanarStack, xi: float, kx: float, ky, N: int, period: float,
                   zero_mode: str = "limit"):
    """Plate reflection (up-going -> down-going) in the (E_y, H_y) basis."""
    from .rcwa import bloch_alpha

    alpha = bloch_alpha(kx, period, N)
    ky = np.asarray(ky, dtype=float)
    diag = fresnel_operator(stack, xi, kx, ky, N, period, zero_mode)
    n = 2 * N + 1
    xi_eff = SMALL_XI if (xi == 0 and zero_mode != "limit") else xi
    eg = 1.0 if xi_eff == 0 else float(mat.eval_imag(stack.gap, xi_eff))
    if xi == 0 and zero_mode == "limit":
        eg = _static_eps(stack.gap)
    u = _u_imag(eg, xi_eff, alpha, ky)
    return te_tm_to_yfield(diag[..., :n], diag[..., n:], eg, alpha, u, "down").real


def translation_operator(xi: float, kx: float, ky, L: float, N: int, period: float,
                         gap: PermittivityModel | None = None):
    """Diagonal of exp(-kappa L), repeated for the e and h blocks."""
    from .rcwa import bloch_alpha

    if L < 0:
        raise ValueError("L must be >= 0")
    eg = 1.0 if gap is None or xi == 0 else float(mat.eval_imag(gap, xi))
    kap = _kappa(eg, xi, bloch_alpha(kx, period, N), ky)
    with np.errstate(under="ignore"):
        p = np.exp(-kap * L)
    return np.concatenate([p, p], axis=-1)


# ----------------------------------------------------- stratified oracle

def slab_reflection(eps_top, eps_layer, thickness, eps_bottom, k0, q2):
    """(r_s, r_p) of a layer on a substrate for waves incident from the top.

    Airy summation of the two interfaces; r_p refers to the H amplitude.
    Works at real k0 or purely imaginary k0 (pass complex).
    """
    def kz(eps):
        return _kz(eps * k0**2 - q2)

    k1, k2, k3 = kz(eps_top), kz(eps_layer), kz(eps_bottom)

    def rs(a, b):
        return (a - b) / (a + b)

    def rp(ea, eb, a, b):
        return (eb * a - ea * b) / (eb * a + ea * b)

    ph = np.exp(2j * k2 * thickness)
    s12, s23 = rs(k1, k2), rs(k2, k3)
    p12, p23 = rp(eps_top, eps_layer, k1, k2), rp(eps_layer, eps_bottom, k2, k3)
    r_s = (s12 + s23 * ph) / (1 + s12 * s23 * ph)
    r_p = (p12 + p23 * ph) / (1 + p12 * p23 * ph)
    return r_s, r_p


def _kz(z):
    g = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(g.imag < 0, -g, g)


def stratified_operator(eps_top, eps_layer, thickness, eps_bottom, omega, alpha, ky):
    """Reflection of a planar stack in the (E_y, H_y) basis, incidence from the top."""
    omega = complex(omega)
    k0 = omega / C
    ky = np.asarray(ky, dtype=float)
    q2 = alpha**2 + ky[..., None] ** 2
    r_s, r_p = slab_reflection(eps_top, eps_layer, thickness, eps_bottom, k0, q2)
    gamma = _kz(eps_top * k0**2 - q2)
    u = ky[..., None] * gamma / k0
    return te_tm_to_yfield(r_s, r_p, eps_top, alpha, u, "up")


# ------------------------------------------------------------ Lifshitz

def _reflector(model, gap, xi, eg, zero_mode):
    """Scalar (r_TE, r_TM) as a function of the gap kappa at fixed xi."""
    if model.is_perfect_mirror or (xi == 0 and zero_mode == "limit"):
        pair = (-1.0, 1.0) if model.is_perfect_mirror else zero_frequency_fresnel(model, gap)
        return lambda kappa: pair
    if xi == 0:
        xi = SMALL_XI
    ep = float(mat.eval_imag(model, xi))
    shift = (ep - eg) * xi**2 / C**2

    def r(kappa):
        kp = math.sqrt(kappa * kappa + shift)
        return fresnel_coefficients(eg, ep, kappa, kp)

    return r


def _kappa_integral(mat_a, mat_b, gap, xi, L, zero_mode, epsrel):
    """int_{kappa_min}^inf kappa^2 sum_sigma r_a r_b e^{-2 kappa L}/(1 - ...) dkappa."""
    eg = 1.0 if xi == 0 else float(mat.eval_imag(gap, xi))
    y0 = 2 * L * math.sqrt(eg) * xi / C
    ra = _reflector(mat_a, gap, xi, eg, zero_mode)
    rb = _reflector(mat_b, gap, xi, eg, zero_mode)

    def f(y):
        kappa = y / (2 * L)
        (ta, pa), (tb, pb) = ra(kappa), rb(kappa)
        e = math.exp(-y)
        return y * y * (ta * tb * e / (1 - ta * tb * e) + pa * pb * e / (1 - pa * pb * e))

    val, err = integrate.quad(f, y0, np.inf, epsrel=epsrel, epsabs=0.0, limit=200)
    return val / (8 * L**3), err / (8 * L**3)


class QuadratureError(RuntimeError):
    pass


def lifshitz_pressure(L: float, T: float, mat_a: PermittivityModel, mat_b: PermittivityModel,
                      gap: PermittivityModel | None = None, zero_mode: str = "limit",
                      epsrel: float = 1e-10) -> float:
    """Plane-plane Casimir pressure (N/m^2, positive = attractive).

    T > 0 sums Matsubara frequencies with half weight on n = 0; T == 0
    integrates over imaginary frequency instead.
    """
    if not L > 0:
        raise ValueError("L must be > 0")
    if T < 0:
        raise ValueError("T must be >= 0")
    gap = gap or mat.vacuum()
    if mat_a.kind is mat.Kind.VACUUM or mat_b.kind is mat.Kind.VACUUM:
        return 0.0

    if T == 0:
        def outer(zeta):
            xi = zeta * C / (2 * L)
            if xi == 0:
                xi = 1e-300
            return _kappa_integral(mat_a, mat_b, gap, xi, L, zero_mode, epsrel)[0]

        val, err = integrate.quad(outer, 0, np.inf, epsrel=1e-9, epsabs=0.0, limit=200)
        if not np.isfinite(val) or abs(err) > 1e-6 * abs(val) + 1e-300:
            raise QuadratureError(f"T=0 frequency integral did not converge (err={err:.3g})")
        return HBAR / (2 * np.pi**2) * val * C / (2 * L)

    xi1 = 2 * np.pi * KB * T / HBAR
    total = 0.0
    n = 0
    while True:
        term, _ = _kappa_integral(mat_a, mat_b, gap, n * xi1, L, zero_mode, epsrel)
        w = 0.5 if n == 0 else 1.0
        total += w * term
        if n > 0 and abs(term) < 1e-13 * abs(total):
            break
        n += 1
        if n > 100000:
            raise QuadratureError("Matsubara sum did not converge")
    return KB * T / np.pi * total


def ideal_pressure(L: float) -> float:
    """pi^2 hbar c / (240 L^4), the T = 0 perfect-mirror pressure."""
    return np.pi**2 * HBAR * C / (240 * L**4)
