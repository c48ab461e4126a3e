"""Reflection and transmission operators of a 1D lamellar grating.

Fourier-modal (RCWA) solution at an arbitrary real or purely imaginary
angular frequency. Geometry (z pointing up, towards the plate):

    region I    z > 0        homogeneous, ``superstrate`` (eps_i)
    grating     -a <= z <= 0 ridge of width f*d centred on x = 0, grooves elsewhere
    region III  z < -a       homogeneous, ``substrate`` (eps_t)

Field amplitudes are the y-components E_y (block "e") and H_y (block "h") of
the Rayleigh plane waves of orders n = -N..N. Every operator returned here is
a 2(2N+1) square matrix laid out as [[ee, eh], [he, hh]], columns indexing the
incident order/polarisation. Units are SI; the free-space wavenumber
k0 = omega / c replaces omega wherever it enters Maxwell's equations.

All solvers accept ``ky`` as a scalar or a 1-D array; array input returns a
stack of matrices with the leading axis running over ``ky``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.linalg import toeplitz

from . import materials as mat
from .materials import PermittivityModel

C = constants.c

UNDERFLOW = 1e-300
COND_WARN = 1e12
COND_EIG_MAX = 1e13


class ConditioningError(np.linalg.LinAlgError):
    """A linear system or eigenbasis is too ill-conditioned to trust."""


class GrazingPoleError(ValueError):
    """eps * k0^2 - ky^2 vanishes; the y-field basis is degenerate there."""


@dataclass(frozen=True)
class GratingSpec:
    period: float
    depth: float
    filling_factor: float
    ridge: PermittivityModel
    substrate: PermittivityModel
    groove: PermittivityModel = field(default_factory=mat.vacuum)
    superstrate: PermittivityModel = field(default_factory=mat.vacuum)

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be > 0")
        if not self.depth >= 0:
            raise ValueError("depth must be >= 0")
        if not 0 <= self.filling_factor <= 1:
            raise ValueError("filling factor must lie in [0, 1]")
        for m in (self.ridge, self.groove, self.superstrate):
            if m.is_perfect_mirror and self.depth > 0:
                raise ValueError("perfect mirrors are only supported as planar (a = 0) faces")
        if self.superstrate.is_perfect_mirror:
            raise ValueError("superstrate cannot be a perfect mirror")

    @property
    def is_planar(self) -> bool:
        """True when the grating layer is absent or laterally uniform."""
        return self.depth == 0 or self.filling_factor in (0.0, 1.0) or self.ridge == self.groove


@dataclass(frozen=True)
class BlochWavevector:
    """In-plane wavevector; kx is restricted to the first Brillouin zone."""

    kx: float
    ky: float
    period: float

    def __post_init__(self):
        if abs(self.kx) > np.pi / self.period * (1 + 1e-12):
            raise ValueError("kx outside the first Brillouin zone")


@dataclass(frozen=True)
class ScatterOperator:
    """Reflection or transmission matrix at one (frequency, kx, ky) point."""

    frequency: complex
    matrix: np.ndarray
    N: int
    kx: float = 0.0
    ky: float | np.ndarray = 0.0

    @property
    def blocks(self):
        n = 2 * self.N + 1
        m = self.matrix
        return m[..., :n, :n], m[..., :n, n:], m[..., n:, :n], m[..., n:, n:]


# ----------------------------------------------------------------- helpers

def orders(N: int) -> np.ndarray:
    if N < 0:
        raise ValueError("truncation order N must be >= 0")
    return np.arange(-N, N + 1)


def bloch_alpha(kx: float, period: float, N: int) -> np.ndarray:
    """Diffracted wavevectors alpha_n = kx + 2 pi n / d."""
    return kx + orders(N) * (2 * np.pi / period)


def permittivity(model: PermittivityModel, omega: complex):
    """eps at a real or purely imaginary angular frequency, as complex."""
    omega = complex(omega)
    if omega.real == 0.0:
        return complex(mat.eval_imag(model, omega.imag))
    if omega.imag == 0.0:
        return complex(mat.eval_real(model, omega.real))
    raise ValueError("only real or purely imaginary frequencies are supported")


def kz_branch(z):
    """sqrt with Im >= 0 (and Re >= 0 on the real axis)."""
    g = np.sqrt(np.asarray(z, dtype=complex))
    flip = (g.imag < 0) | ((g.imag == 0) & (g.real < 0))
    return np.where(flip, -g, g)


def lambda_branch(lam):
    """sqrt with Re >= 0, ties broken by Im >= 0, so exp(-sqrt(lam) a) decays."""
    s = np.sqrt(np.asarray(lam, dtype=complex))
    flip = (s.real < 0) | ((s.real == 0) & (s.imag < 0))
    return np.where(flip, -s, s)


def _blocks2(a, b, c, d):
    top = np.concatenate([a, b], axis=-1)
    bot = np.concatenate([c, d], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _diag(v):
    """Batched diagonal matrices from (..., n) arrays."""
    v = np.asarray(v)
    out = np.zeros(v.shape + (v.shape[-1],), dtype=np.result_type(v, complex))
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


def _as_ky(ky):
    ky = np.asarray(ky, dtype=float)
    return ky, ky.ndim == 0


# ------------------------------------------------------- Fourier / Toeplitz

def fourier_coefficients(eps_ridge, eps_groove, f: float, nmax: int) -> np.ndarray:
    """Coefficients c_0..c_nmax of the centred lamellar profile."""
    n = np.arange(nmax + 1)
    c = (eps_ridge - eps_groove) * f * np.sinc(n * f)
    c = c.astype(complex)
    # sin(pi n f) rounds to ~1e-16 instead of 0 when n f is an integer
    c[(n > 0) & (n * f == np.round(n * f))] = 0
    c[0] += eps_groove
    return c


def fourier_toeplitz(spec: GratingSpec, omega: complex, N: int):
    """Toeplitz matrices of eps(x) and 1/eps(x), each (2N+1) square."""
    if N < 0:
        raise ValueError("truncation order N must be >= 0")
    er = permittivity(spec.ridge, omega)
    eg = permittivity(spec.groove, omega)
    f = spec.filling_factor
    c = fourier_coefficients(er, eg, f, 2 * N)
    ci = fourier_coefficients(1 / er, 1 / eg, f, 2 * N)
    return toeplitz(c), toeplitz(ci)


# ---------------------------------------------------------- Maxwell blocks

def _k0(omega):
    return complex(omega) / C


def build_maxwell_blocks(spec: GratingSpec, omega: complex, kx: float, ky, N: int):
    """Off-diagonal blocks M1, M2 of the first-order system dF/dz = M F.

    F = (e_x, e_y, h_x, h_y). The lower-left block uses the inverse of the
    Toeplitz matrix of 1/eps for the normal field component.
    """
    if omega == 0:
        raise ValueError("omega must be nonzero")
    ky, scalar = _as_ky(ky)
    k0 = _k0(omega)
    E, B = fourier_toeplitz(spec, omega, N)
    Einv = np.linalg.inv(E)
    A = _inv_checked(B, "Toeplitz(1/eps)")
    al = np.diag(bloch_alpha(kx, spec.period, N)).astype(complex)
    one = np.eye(2 * N + 1)
    kyb = ky[..., None, None]
    i = 1j
    M1 = _blocks2(
        -(i * kyb / k0) * (al @ Einv) + 0 * one,
        -i * k0 * one + (i / k0) * (al @ Einv @ al) + 0 * kyb,
        i * k0 * one - (i * kyb**2 / k0) * Einv,
        (i * kyb / k0) * (Einv @ al),
    )
    M2 = _blocks2(
        (i * kyb / k0) * al,
        i * k0 * E - (i / k0) * (al @ al) + 0 * kyb,
        -i * k0 * A + (i * kyb**2 / k0) * one,
        -(i * kyb / k0) * al,
    )
    if scalar:
        return M1[()], M2[()]
    return M1, M2


def _inv_checked(m, what):
    c = np.linalg.cond(m)
    if not np.isfinite(c) or c > 1 / np.finfo(float).eps:
        raise ConditioningError(f"{what} is singular (cond={c:.3g})")
    return np.linalg.inv(m)


def helmholtz_matrix(spec: GratingSpec, omega: complex, kx: float, ky, N: int):
    """M^(e) = M1 M2 in closed form.

    The product is block lower-triangular; multiplying it out analytically
    removes the 1/k0^2 terms that cancel exactly, which keeps the matrix
    accurate at small imaginary frequency.
    """
    ky, scalar = _as_ky(ky)
    k0 = _k0(omega)
    E, B = fourier_toeplitz(spec, omega, N)
    Einv = np.linalg.inv(E)
    A = _inv_checked(B, "Toeplitz(1/eps)")
    alpha = bloch_alpha(kx, spec.period, N)
    al = np.diag(alpha)
    n = 2 * N + 1
    one = np.eye(n)
    kyb = ky[..., None, None]
    m11 = (al @ Einv @ al - k0**2 * one) @ A + kyb**2 * one
    m12 = np.zeros_like(m11)
    m21 = kyb * (Einv @ al @ A - al)
    m22 = al @ al + kyb**2 * one - k0**2 * E
    Me = _blocks2(m11, m12 + 0 * kyb, m21 + 0 * m11, m22 + 0 * kyb)
    return Me[()] if scalar else Me


def m1_inverse_times(spec: GratingSpec, omega: complex, kx: float, ky, N: int, rhs):
    """M1^{-1} @ rhs via the closed-form inverse of M1.

    M1 = (i/k0) (k0^2 J + U Einv W) with J = [[0, -1], [1, 0]]; the Woodbury
    identity gives M1^{-1} = (i/k0) (J + [-ky; alpha] G [alpha, ky]) with
    G = (k0^2 E - alpha^2 - ky^2)^{-1}.
    """
    ky, _ = _as_ky(ky)
    k0 = _k0(omega)
    E, _ = fourier_toeplitz(spec, omega, N)
    alpha = bloch_alpha(kx, spec.period, N)
    n = 2 * N + 1
    kyb = ky[..., None, None]
    K = alpha**2 + ky[..., None] ** 2
    Gm = k0**2 * E - _diag(K)
    top, bot = rhs[..., :n, :], rhs[..., n:, :]
    # [alpha, ky] @ rhs
    s = alpha[:, None] * top + kyb * bot
    g = np.linalg.solve(Gm, s)
    out_top = -bot - kyb * g
    out_bot = top + alpha[:, None] * g
    return (1j / k0) * np.concatenate([out_top, out_bot], axis=-2)


def helmholtz_eigen(Me, check: bool = True):
    """Eigen-decomposition M^(e) = phi diag(lam) phi^{-1} with decaying roots.

    Returns (phi, lam, sqrt_lam). With ``check`` the eigenvector matrix
    condition number is tested against COND_EIG_MAX.
    """
    lam, phi = np.linalg.eig(Me)
    if check:
        c = np.linalg.cond(phi)
        if np.any(~np.isfinite(c)) or np.any(c > COND_EIG_MAX):
            raise ConditioningError(
                f"near-defective Helmholtz matrix (cond(phi)={np.max(c):.3g}); "
                "change N or nudge the frequency"
            )
    return phi, lam, lambda_branch(lam)


# ------------------------------------------------------- boundary matrices

def _region_blocks(eps, k0, alpha, ky, gamma, sign):
    """(e-rows, h-rows) mapping (E_y, H_y) amplitudes to (e_x, e_y, h_x, h_y).

    ``sign`` = -1 for waves travelling towards -z (kz = -gamma) and +1 for
    waves travelling towards +z.
    """
    D = eps * k0**2 - ky**2
    if np.any(np.abs(D) <= 1e-12 * np.maximum(np.abs(eps * k0**2), ky**2)):
        raise GrazingPoleError("eps*k0^2 - ky^2 vanishes; perturb ky")
    Db = np.asarray(D)[..., None]
    kyb = np.asarray(ky)[..., None]
    one = np.ones_like(gamma)
    zero = np.zeros_like(gamma)
    mix = -kyb * alpha / Db
    e_rows = _blocks2(_diag(mix * one), _diag(-sign * k0 * gamma / Db), _diag(one), _diag(zero))
    h_rows = _blocks2(_diag(sign * k0 * eps * gamma / Db), _diag(mix * one), _diag(zero), _diag(one))
    return e_rows, h_rows


def _gamma(eps, k0, alpha, ky):
    ky = np.asarray(ky)
    return kz_branch(eps * k0**2 - alpha**2 - ky[..., None] ** 2)


def boundary_matrices(spec: GratingSpec, omega: complex, kx: float, ky, N: int):
    """(t_e, t_h, r_e, r_h, i_ee, i_eh, i_he, i_hh) of the Rayleigh regions.

    t_* act on transmitted amplitudes at z = -a, r_* on reflected amplitudes
    at z = 0, i_** on the incident amplitudes (columns: sigma = e, h).
    """
    ky, scalar = _as_ky(ky)
    k0 = _k0(omega)
    alpha = bloch_alpha(kx, spec.period, N)
    ei = permittivity(spec.superstrate, omega)
    et = permittivity(spec.substrate, omega)
    gi = _gamma(ei, k0, alpha, ky)
    gt = _gamma(et, k0, alpha, ky)
    t_e, t_h = _region_blocks(et, k0, alpha, ky, gt, -1)
    r_e, r_h = _region_blocks(ei, k0, alpha, ky, gi, +1)
    inc_e, inc_h = _region_blocks(ei, k0, alpha, ky, gi, -1)
    n = 2 * N + 1
    i_ee, i_eh = inc_e[..., :, :n], inc_e[..., :, n:]
    i_he, i_hh = inc_h[..., :, :n], inc_h[..., :, n:]
    out = (t_e, t_h, r_e, r_h, i_ee, i_eh, i_he, i_hh)
    return tuple(o[()] for o in out) if scalar else out


# ------------------------------------------------------------- the solver

@dataclass
class _Solution:
    R: np.ndarray
    T: np.ndarray
    cond: np.ndarray


def _solve_direct(spec: GratingSpec, omega: complex, kx: float, ky, N: int, want_T=True,
                  check=False):
    """Reference path: full eigen-decomposition and one reduced solve per ky."""
    ky, scalar = _as_ky(ky)
    kyv = np.atleast_1d(ky)
    k0 = _k0(omega)
    n = 2 * N + 1
    m = 2 * n

    Me = helmholtz_matrix(spec, omega, kx, kyv, N)
    phi, lam, sq = helmholtz_eigen(Me, check=check)
    V = m1_inverse_times(spec, omega, kx, kyv, N, phi * sq[..., None, :])

    t_e, t_h, r_e, r_h, i_ee, i_eh, i_he, i_hh = boundary_matrices(spec, omega, kx, kyv, N)
    i_e = np.concatenate([i_ee, i_eh], axis=-1)
    i_h = np.concatenate([i_he, i_hh], axis=-1)

    with np.errstate(under="ignore", over="ignore"):
        x = np.exp(-sq * spec.depth)
    x = np.where(np.abs(x) < UNDERFLOW, 0, x)
    X = x[..., None, :]

    # r_e r_h^{-1} (V, i_h) and t_e t_h^{-1} V without explicit inverses
    sol_r = np.linalg.solve(r_h, np.concatenate([V, i_h], axis=-1))
    Qr = r_e @ sol_r[..., :m]
    Wr = r_e @ sol_r[..., m:]
    Qt = t_e @ np.linalg.solve(t_h, V)

    big = _blocks2((phi - Qt) * X, phi + Qt, phi - Qr, (phi + Qr) * X)
    rhs = np.concatenate([np.zeros_like(i_e), i_e - Wr], axis=-2)
    cond = np.linalg.cond(big) if check else np.full(kyv.shape, np.nan)
    if check and np.any(cond > COND_WARN):
        warnings.warn(f"reduced RCWA system ill-conditioned (cond={np.max(cond):.3g}, "
                      f"N={N}, omega={omega}, kx={kx})", RuntimeWarning, stacklevel=3)
    try:
        Cc = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular reduced system (N={N}, omega={omega}, kx={kx})") from exc
    Cp, Cm = Cc[..., :m, :], Cc[..., m:, :]

    R = np.linalg.solve(r_h, V @ (Cp - x[..., :, None] * Cm) - i_h)
    T = np.linalg.solve(t_h, V @ (x[..., :, None] * Cp - Cm)) if want_T else None
    if scalar:
        R = R[0]
        T = None if T is None else T[0]
        cond = cond[0]
    return _Solution(R, T, cond)


class _Degenerate(Exception):
    pass


def _bd_region(eps, k0, alpha, ky, gamma, sign):
    """_region_blocks as 2x2 blocks of diagonals, shape (..., 2, 2, n) twice."""
    D = eps * k0**2 - ky**2
    if np.any(np.abs(D) <= 1e-12 * np.maximum(np.abs(eps * k0**2), ky**2)):
        raise GrazingPoleError("eps*k0^2 - ky^2 vanishes; perturb ky")
    Db = np.asarray(D)[..., None]
    mix = -np.asarray(ky)[..., None] * alpha / Db * np.ones_like(gamma)
    one, zero = np.ones_like(gamma), np.zeros_like(gamma)
    e = np.stack([np.stack([mix, -sign * k0 * gamma / Db], -2), np.stack([one, zero], -2)], -3)
    h = np.stack([np.stack([sign * k0 * eps * gamma / Db, mix], -2), np.stack([zero, one], -2)], -3)
    return e, h


def _bd_inv(m):
    a, b, c, d = m[..., 0, 0, :], m[..., 0, 1, :], m[..., 1, 0, :], m[..., 1, 1, :]
    det = a * d - b * c
    return np.stack([np.stack([d, -b], -2), np.stack([-c, a], -2)], -3) / det[..., None, None, :]


def _bd_mul(m1, m2):
    return np.einsum("...ijn,...jkn->...ikn", m1, m2)


def _bd_apply(m, X):
    """(2x2 block-diagonal) @ X for X of shape (..., 2n, k)."""
    n = m.shape[-1]
    top, bot = X[..., :n, :], X[..., n:, :]
    col = lambda v: v[..., :, None]
    return np.concatenate([col(m[..., 0, 0, :]) * top + col(m[..., 0, 1, :]) * bot,
                           col(m[..., 1, 0, :]) * top + col(m[..., 1, 1, :]) * bot], axis=-2)


def _bd_dense(m):
    n = m.shape[-1]
    return _blocks2(_diag(m[..., 0, 0, :]), _diag(m[..., 0, 1, :]),
                    _diag(m[..., 1, 0, :]), _diag(m[..., 1, 1, :]))


def _solve_fast(spec: GratingSpec, omega: complex, kx: float, ky, N: int, want_T=True):
    """Batched solver sharing one eigen-decomposition across all ky.

    ky enters M^(e) only through a shift ky^2 of both diagonal blocks and a
    factor ky on the lower-left block, so the eigenvectors of the two
    (2N+1) diagonal blocks serve every ky. The reduced system is solved by
    eliminating C- first (two 2(2N+1) solves instead of one 4(2N+1) solve).
    """
    ky, scalar = _as_ky(ky)
    kyv = np.atleast_1d(ky)
    k0 = _k0(omega)
    n = 2 * N + 1
    m = 2 * n
    E, B = fourier_toeplitz(spec, omega, N)
    Einv = np.linalg.inv(E)
    A = _inv_checked(B, "Toeplitz(1/eps)")
    alpha = bloch_alpha(kx, spec.period, N)
    al = np.diag(alpha)
    a11 = (al @ Einv @ al - k0**2 * np.eye(n)) @ A
    b22 = al @ al - k0**2 * E
    c21 = Einv @ al @ A - al
    la, Wa = np.linalg.eig(a11)
    lb, Wb = np.linalg.eig(b22)
    Wb_inv = np.linalg.inv(Wb)
    num = Wb_inv @ c21 @ Wa
    gap = la[None, :] - lb[:, None]
    scale = np.abs(la[None, :]) + np.abs(lb[:, None]) + 1e-300
    tiny = np.abs(gap) < 1e-9 * scale
    coupling = max(np.abs(alpha).max(), 2 * np.pi / spec.period)
    if np.any(tiny & (np.abs(num) > 1e-9 * coupling)):
        raise _Degenerate
    Z = Wb @ np.where(tiny, 0, num / np.where(tiny, 1, gap))

    kyb = kyv[:, None, None]
    lam = np.concatenate([la, lb])[None, :] + kyv[:, None] ** 2
    sq = lambda_branch(lam)
    # phi = [[Wa, 0], [ky Z, Wb]] and rhs = phi sqrt(lam)
    top = np.concatenate([np.broadcast_to(Wa, (kyv.size, n, n)), np.zeros((kyv.size, n, n))], -1)
    bot = np.concatenate([kyb * Z, np.broadcast_to(Wb, (kyv.size, n, n))], -1)
    phi = np.concatenate([top, bot], -2)
    rt, rb = top * sq[:, None, :], bot * sq[:, None, :]
    # M1^{-1} via Woodbury, G = -(b22 + ky^2)^{-1} = -Wb diag(1/(lb + ky^2)) Wb^{-1}
    s = alpha[:, None] * rt + kyb * rb
    g = -(Wb @ ((Wb_inv @ s) / (lb[None, :] + kyv[:, None] ** 2)[..., None]))
    V = (1j / k0) * np.concatenate([-rb - kyb * g, rt + alpha[:, None] * g], -2)

    ei = permittivity(spec.superstrate, omega)
    et = permittivity(spec.substrate, omega)
    gi = _gamma(ei, k0, alpha, kyv)
    gt = _gamma(et, k0, alpha, kyv)
    te, th = _bd_region(et, k0, alpha, kyv, gt, -1)
    re, rh = _bd_region(ei, k0, alpha, kyv, gi, +1)
    ie, ih = _bd_region(ei, k0, alpha, kyv, gi, -1)
    rh_inv = _bd_inv(rh)
    ratio_r = _bd_mul(re, rh_inv)
    # applying the inverse first keeps more digits at small |k0|
    Qr = _bd_apply(re, _bd_apply(rh_inv, V))
    Qt = _bd_apply(te, _bd_apply(_bd_inv(th), V))
    rhs = _bd_dense(ie - _bd_mul(ratio_r, ih))

    with np.errstate(under="ignore", over="ignore"):
        x = np.exp(-sq * spec.depth)
    x = np.where(np.abs(x) < UNDERFLOW, 0, x)
    X = x[..., None, :]
    # first block row: C- = -S X C+
    S = np.linalg.solve(phi + Qt, phi - Qt)
    lhs = (phi - Qr) - ((phi + Qr) * X) @ (S * X)
    try:
        Cp = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"singular reduced system (N={N}, omega={omega}, kx={kx})") from exc
    Cm = -(S * X) @ Cp
    ihd = _bd_dense(ih)
    R = _bd_apply(rh_inv, V @ (Cp - x[..., :, None] * Cm) - ihd)
    T = _bd_apply(_bd_inv(th), V @ (x[..., :, None] * Cp - Cm)) if want_T else None
    cond = np.full(kyv.shape, np.nan)
    if scalar:
        R = R[0]
        T = None if T is None else T[0]
        cond = cond[0]
    return _Solution(R, T, cond)


def _solve(spec: GratingSpec, omega: complex, kx: float, ky, N: int, want_T=True, check=False):
    if check:
        return _solve_direct(spec, omega, kx, ky, N, want_T, check)
    try:
        return _solve_fast(spec, omega, kx, ky, N, want_T)
    except _Degenerate:
        return _solve_direct(spec, omega, kx, ky, N, want_T, check)


def grating_reflection(spec: GratingSpec, omega: complex, kx: float, ky, N: int,
                       check: bool = False) -> ScatterOperator:
    """Reflection operator R_g of the grating for waves incident from region I."""
    sol = _solve(spec, omega, kx, ky, N, want_T=False, check=check)
    return ScatterOperator(complex(omega), sol.R, N, kx, ky)


def grating_transmission(spec: GratingSpec, omega: complex, kx: float, ky, N: int,
                         check: bool = False) -> ScatterOperator:
    sol = _solve(spec, omega, kx, ky, N, want_T=True, check=check)
    return ScatterOperator(complex(omega), sol.T, N, kx, ky)


def grating_operators(spec: GratingSpec, omega: complex, kx: float, ky, N: int,
                      check: bool = False):
    """(R_g, T_g, condition numbers) from a single solve."""
    sol = _solve(spec, omega, kx, ky, N, want_T=True, check=check)
    return sol.R, sol.T, sol.cond


# ------------------------------------------------- real-frequency checks

def poynting_z(eps, k0, alpha, ky, kz, Ey, Hy):
    """Time-averaged z-flux (up to a common constant) of plane waves.

    Positive for waves travelling towards +z (kz > 0).
    """
    D = eps * k0**2 - ky**2
    Ex = -(ky * alpha * Ey + k0 * kz * Hy) / D
    Hx = (-ky * alpha * Hy + k0 * eps * kz * Ey) / D
    # the stored H is -Z0 times the physical field
    return -0.5 * np.real(Ex * np.conj(Hy) - Ey * np.conj(Hx))


def diffraction_efficiencies(spec: GratingSpec, omega: float, kx: float, ky: float, N: int,
                             order: int = 0, polarization: str = "e"):
    """Per-order reflected and transmitted efficiencies at real frequency.

    Returns (orders, eff_R, eff_T); evanescent orders carry zero efficiency.
    """
    if not np.isreal(omega) or omega <= 0:
        raise ValueError("diffraction efficiencies need a real, positive frequency")
    models = (spec.ridge, spec.groove, spec.substrate, spec.superstrate)
    for mdl in models:
        e = permittivity(mdl, omega)
        if abs(e.imag) > 0:
            raise ValueError(f"{mdl.name}: lossy material, energy balance undefined")
    k0 = omega / C
    alpha = bloch_alpha(kx, spec.period, N)
    ei = permittivity(spec.superstrate, omega).real
    et = permittivity(spec.substrate, omega).real
    gi = _gamma(ei, k0, alpha, ky)
    gt = _gamma(et, k0, alpha, ky)
    p = order + N
    if not (gi[p].imag == 0 and gi[p].real > 0):
        raise ValueError("incident order is not propagating")
    R, T, _ = grating_operators(spec, omega, kx, ky, N)
    n = 2 * N + 1
    col = p if polarization == "e" else n + p
    Ey_in = 1.0 if polarization == "e" else 0.0
    Hy_in = 0.0 if polarization == "e" else 1.0
    s_in = abs(poynting_z(ei, k0, alpha[p], ky, -gi[p], Ey_in, Hy_in))
    prop_i = (gi.imag == 0) & (gi.real > 0)
    prop_t = (gt.imag == 0) & (gt.real > 0)
    sr = poynting_z(ei, k0, alpha, ky, gi, R[:n, col], R[n:, col])
    st = -poynting_z(et, k0, alpha, ky, -gt, T[:n, col], T[n:, col])
    eff_R = np.where(prop_i, sr / s_in, 0.0)
    eff_T = np.where(prop_t, st / s_in, 0.0)
    return orders(N), eff_R, eff_T


# ------------------------------------------------- zero-frequency limit
#
# As omega -> 0 the TE-like fields of a non-magnetic structure stop
# scattering and the TM-like fields become electrostatic, E = -grad(phi).
# The e-block of R_g tends to the reflection matrix of the potential
# amplitudes; the h-block and the e/h coupling vanish.

CONDUCTOR_EPS = 1e8


def _static_eps(model: PermittivityModel) -> float:
    if model.is_perfect_mirror or mat.has_drude_term(model):
        return np.inf
    return float(mat.eval_imag(model, 0.0))


def static_potential_reflection(spec: GratingSpec, kx: float, ky, N: int, method: str = "auto",
                                modes: int | None = None):
    """Electrostatic reflection matrix of potential amplitudes, (..., 2N+1)^2.

    ``method`` is "fmm" (Fourier modal, conductors replaced by
    CONDUCTOR_EPS), "modal" (exact groove eigenmodes, conducting ridge and
    substrate) or "auto".
    """
    ky, scalar = _as_ky(ky)
    kyv = np.atleast_1d(ky)
    er, eg = _static_eps(spec.ridge), _static_eps(spec.groove)
    ei, et = _static_eps(spec.superstrate), _static_eps(spec.substrate)
    if not np.isfinite(ei):
        raise ValueError("superstrate must be a dielectric")
    alpha = bloch_alpha(kx, spec.period, N)
    kap = np.sqrt(alpha**2 + kyv[:, None] ** 2)
    conducting = np.isinf(er) and np.isinf(et) and np.isfinite(eg)
    if method == "auto":
        method = "modal" if conducting and 0 < spec.filling_factor < 1 and spec.depth > 0 else "fmm"
    if spec.depth == 0 or spec.is_planar and method == "fmm":
        layer = er if spec.filling_factor > 0 else eg
        R = _static_planar(ei, layer, spec.depth, et, kap)
    elif method == "modal":
        if not conducting:
            raise ValueError("modal method needs conducting ridge and substrate")
        R = _static_modal(spec, eg, ei, alpha, kyv, kap, modes)
    else:
        R = _static_fmm(spec, er, eg, ei, et, alpha, kyv, kap, N)
    return R[0] if scalar else R


def _static_planar(ei, el, a, et, kap):
    def r(e1, e2):
        if np.isinf(e2):
            return -np.ones_like(kap)
        return (e1 - e2) / (e1 + e2) * np.ones_like(kap)

    if a == 0 or el == ei:
        rr = r(ei, et)
    else:
        r12, r23 = r(ei, el), r(el, et)
        ph = np.exp(-2 * kap * a)
        rr = (r12 + r23 * ph) / (1 + r12 * r23 * ph)
    return _diag(rr)


def _static_fmm(spec, er, eg, ei, et, alpha, ky, kap, N):
    er = CONDUCTOR_EPS if np.isinf(er) else er
    eg = CONDUCTOR_EPS if np.isinf(eg) else eg
    f = spec.filling_factor
    E = toeplitz(fourier_coefficients(er, eg, f, 2 * N).real)
    B = toeplitz(fourier_coefficients(1 / er, 1 / eg, f, 2 * N).real)
    A = np.linalg.inv(B)
    Einv = np.linalg.inv(E)
    n = 2 * N + 1
    al = np.diag(alpha)
    Q = (Einv @ al @ A @ al)[None] + (ky**2)[:, None, None] * np.eye(n)
    q, W = np.linalg.eig(Q)
    s = lambda_branch(q)
    with np.errstate(under="ignore"):
        x = np.exp(-s * spec.depth)
    x = np.where(np.abs(x) < UNDERFLOW, 0, x)[:, None, :]
    EWs = E @ W * s[:, None, :]
    kW = kap[:, :, None] * W
    top = np.concatenate([EWs + ei * kW, (-EWs + ei * kW) * x], axis=-1)
    if np.isinf(et):
        bot = np.concatenate([W * x, W], axis=-1)
    else:
        bot = np.concatenate([(EWs - et * kW) * x, -(EWs + et * kW)], axis=-1)
    big = np.concatenate([top, bot], axis=-2)
    rhs = np.concatenate([_diag(2 * ei * kap), np.zeros_like(_diag(kap))], axis=-2)
    c = np.linalg.solve(big, rhs)
    cp, cm = c[:, :n], c[:, n:]
    return W @ (cp + x.transpose(0, 2, 1) * cm) - np.eye(n)


def _groove_overlap(alpha, km, x0, w, d):
    """K[n, m] = (1/d) int_{x0}^{x0+w} sin(km (x - x0)) exp(-i alpha_n x) dx."""
    a = alpha[:, None]
    k = km[None, :]
    m = np.arange(1, km.size + 1)[None, :]
    den = k**2 - a**2
    near = np.abs(den) < 1e-9 * k**2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = k * (1 - (-1.0) ** m * np.exp(-1j * a * w)) / np.where(near, 1.0, den)
    val = np.where(near, -0.5j * np.sign(a) * w, val)
    return np.exp(-1j * a * x0) * val / d


def _static_modal(spec, eg, ei, alpha, ky, kap, modes):
    d, f, a = spec.period, spec.filling_factor, spec.depth
    w = (1 - f) * d
    x0 = f * d / 2
    n = alpha.size
    M = modes or max(2, int(round((1 - f) * n)))
    km = np.arange(1, M + 1) * np.pi / w
    K = _groove_overlap(alpha, km, x0, w, d)  # (n, M)
    mu = np.sqrt(km[None, :] ** 2 + ky[:, None] ** 2)  # (nk, M)
    with np.errstate(under="ignore"):
        e2 = np.exp(-2 * mu * a)
    S = 1 - e2
    Pm = eg * (w / 2) * mu * (1 + e2)
    KH = K.conj().T
    lhs = _diag(Pm) + ei * d * (KH[None] * kap[:, None, :]) @ (K[None] * S[:, None, :])
    rhs = 2 * ei * d * KH[None] * kap[:, None, :]
    coef = np.linalg.solve(lhs, rhs)
    return (K[None] * S[:, None, :]) @ coef - np.eye(n)


def grating_reflection_static(spec: GratingSpec, kx: float, ky, N: int, method: str = "auto"):
    """xi -> 0 limit of R_g in the (E_y, H_y) basis."""
    ky, scalar = _as_ky(ky)
    kyv = np.atleast_1d(ky)
    n = 2 * N + 1
    Res = static_potential_reflection(spec, kx, kyv, N, method)
    R = np.zeros(Res.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    R[..., :n, :n] = Res
    if np.isinf(_static_eps(spec.substrate)) and spec.substrate.is_perfect_mirror and spec.depth == 0:
        R[..., n:, n:] = np.eye(n)  # -r_TE with r_TE = -1
    return R[0] if scalar else R
