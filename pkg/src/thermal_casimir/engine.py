"""Casimir pressure between a planar mirror and a lamellar grating.

The pressure (positive = attraction) is

    P = -PRESSURE_PREFACTOR * kB T * sum'_n  int_BZ dkx int dky  tr[(1 - M)^-1 dM/dL]

with M = R_p P R_g P the round trip between plate and grating and
P = exp(-kappa L). At T = 0 the sum kB T sum'_n is replaced by
(hbar / 2 pi) int_0^inf dxi.

The integrand is evaluated in batches over the ky nodes. Tasks over
(xi, kx) are independent and may run on a thread pool; their results are
always reduced in a fixed order, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from . import materials as mat
from . import planar, rcwa
from .planar import PlanarStack
from .rcwa import GratingSpec

C = constants.c
HBAR = constants.hbar
KB = constants.k

# One global normalization of the (kx, ky) measure; fixed by agreement with
# the plane-plane Lifshitz formula at zero trench depth.
PRESSURE_PREFACTOR = 1.0 / (4.0 * math.pi**2)

N_CAP = 2000


class SingularRoundTripError(np.linalg.LinAlgError):
    """1 - M could not be solved."""


class ConvergenceError(RuntimeError):
    """Matsubara sum or frequency integral failed to converge."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation and quadrature settings.

    Parameters
    ----------
    N : int
        Diffraction orders -N..N.
    n_max_rule : float
        Relative size of a Matsubara term below which the sum stops.
    kx_nodes, ky_nodes, xi_nodes : int
        Gauss-Legendre node counts for kx on [0, pi/d], ky on [0, inf)
        and the T = 0 frequency half-line.
    ky_map_scale : float or None
        Scale s of the map k = s t / (1 - t) used for ky (and for kx,
        truncated at pi/d), in 1/m; None means 1/(2L).
    rel_tol : float
        Target relative accuracy; the tail estimate is checked against it.
    skip_tol : float
        Nodes with exp(-2 kappa_min L) below this are skipped.
    zero_method : str
        Solver for the zero-frequency grating limit ("auto", "modal", "fmm").
    """

    N: int = 12
    n_max_rule: float = 1e-4
    kx_nodes: int = 12
    ky_nodes: int = 24
    ky_map_scale: float | None = None
    rel_tol: float = 1e-3
    xi_nodes: int = 32
    skip_tol: float = 1e-14
    zero_method: str = "auto"

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be >= 0")
        for name in ("kx_nodes", "ky_nodes", "xi_nodes"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2")
        for name in ("n_max_rule", "rel_tol", "skip_tol"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.ky_map_scale is not None and not self.ky_map_scale > 0:
            raise ValueError("ky_map_scale must be > 0")
        if self.zero_method not in ("auto", "modal", "fmm"):
            raise ValueError("zero_method must be auto, modal or fmm")


@dataclass(frozen=True)
class Diagnostics:
    N_used: int
    n_max_used: int
    worst_condition: float
    tail_estimate: float
    max_imag_ratio: float = 0.0
    nodes_evaluated: int = 0
    nodes_skipped: int = 0


@dataclass(frozen=True)
class ForcePoint:
    """Pressure at one (L, T) with its Matsubara breakdown.

    ``per_n_terms[n]`` is the full (unhalved) n-th term; the pressure is
    ``per_n_terms[0] / 2 + sum(per_n_terms[1:])``. At T = 0 the list is
    empty and the pressure is the frequency integral.
    """

    L: float
    T: float
    pressure: float
    per_n_terms: tuple = ()
    diagnostics: Diagnostics | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)

    @property
    def converged(self) -> bool:
        d = self.diagnostics
        return bool(d is not None and d.tail_estimate <= self.quad.rel_tol * abs(self.pressure))


# ------------------------------------------------------------- operators

def _is_transparent(g: GratingSpec) -> bool:
    s = g.superstrate
    return g.substrate == s and (g.depth == 0 or (g.ridge == s and g.groove == s)
                                 or (g.filling_factor == 1 and g.ridge == s)
                                 or (g.filling_factor == 0 and g.groove == s))


def _gap_eps(model, xi):
    if xi == 0:
        return float(mat.eval_imag(model, 0.0)) if not mat.has_drude_term(model) else math.inf
    return float(mat.eval_imag(model, xi))


def grating_operator(grating: GratingSpec, xi: float, kx: float, ky, N: int,
                     zero_method: str = "auto"):
    """R_g at imaginary frequency xi in the (E_y, H_y) basis, batched over ky."""
    ky = np.atleast_1d(np.asarray(ky, dtype=float))
    n = 2 * N + 1
    if _is_transparent(grating):
        return np.zeros((ky.size, 2 * n, 2 * n), dtype=complex)
    if grating.depth == 0 and grating.substrate.is_perfect_mirror:
        alpha = rcwa.bloch_alpha(kx, grating.period, N)
        eg = _gap_eps(grating.superstrate, xi)
        u = planar._u_imag(eg, xi, alpha, ky)
        one = np.ones(ky.shape + (n,))
        return planar.te_tm_to_yfield(-one, one, eg, alpha, u, "up").astype(complex)
    if xi == 0:
        return rcwa.grating_reflection_static(grating, kx, ky, N, zero_method)
    return rcwa.grating_reflection(grating, 1j * xi, kx, ky, N).matrix


def _kappa(grating, xi, kx, ky, N):
    alpha = rcwa.bloch_alpha(kx, grating.period, N)
    eg = 1.0 if xi == 0 else _gap_eps(grating.superstrate, xi)
    k = planar._kappa(eg, xi, alpha, np.atleast_1d(ky))
    return np.concatenate([k, k], axis=-1)


def _check_media(plate: PlanarStack, grating: GratingSpec):
    if plate.gap != grating.superstrate:
        raise ValueError("plate gap medium and grating superstrate must agree")


def _parts(xi, kx, ky, L, plate, grating, N, zero_method):
    ky = np.atleast_1d(np.asarray(ky, dtype=float))
    Rp = planar.plate_operator(plate, xi, kx, ky, N, grating.period)
    Rg = grating_operator(grating, xi, kx, ky, N, zero_method)
    kap = _kappa(grating, xi, kx, ky, N)
    with np.errstate(under="ignore"):
        p = np.exp(-kap * L)
    return Rp, Rg, kap, p


def roundtrip(xi: float, kx: float, ky, L: float, plate: PlanarStack, grating: GratingSpec,
              N: int, zero_method: str = "auto"):
    """M = R_p P R_g P, shape (nky, 2n, 2n)."""
    _check_media(plate, grating)
    Rp, Rg, _, p = _parts(xi, kx, ky, L, plate, grating, N, zero_method)
    return (Rp * p[:, None, :]) @ (Rg * p[:, None, :])


def roundtrip_derivative(xi: float, kx: float, ky, L: float, plate: PlanarStack,
                         grating: GratingSpec, N: int, zero_method: str = "auto"):
    """Analytic dM/dL = -(kappa M + R_p P R_g kappa P)."""
    _check_media(plate, grating)
    Rp, Rg, kap, p = _parts(xi, kx, ky, L, plate, grating, N, zero_method)
    A = Rp * p[:, None, :]
    M = A @ (Rg * p[:, None, :])
    return -(kap[..., :, None] * M + A @ (Rg * (kap * p)[:, None, :]))


def _trace(Rp, Rg, kap, p):
    """tr[(1 - M)^-1 dM/dL] and cond(1 - M) per batch entry."""
    A = Rp * p[:, None, :]
    M = A @ (Rg * p[:, None, :])
    dM = -(kap[..., :, None] * M + A @ (Rg * (kap * p)[:, None, :]))
    one_m = np.eye(M.shape[-1]) - M
    try:
        X = np.linalg.solve(one_m, dM)
    except np.linalg.LinAlgError as exc:
        raise SingularRoundTripError("1 - M is singular") from exc
    tr = np.trace(X, axis1=-2, axis2=-1)
    return tr, one_m


def integrand(xi: float, kx: float, ky, L: float, plate: PlanarStack, grating: GratingSpec,
              N: int, zero_method: str = "auto"):
    """Real trace tr[(1 - M)^-1 dM/dL] for each ky (negative for attraction)."""
    _check_media(plate, grating)
    tr, _ = _trace(*_parts(xi, kx, ky, L, plate, grating, N, zero_method))
    return tr.real


# ------------------------------------------------------------ quadrature

def _gauss(n, a, b):
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def _halfline(n, scale):
    """Nodes/weights for int_0^inf via x = scale t / (1 - t)."""
    t, w = _gauss(n, 0.0, 1.0)
    return scale * t / (1 - t), w * scale / (1 - t) ** 2


def _unfolded(grating: GratingSpec, N: int) -> bool:
    # A laterally uniform layer with a single order: integrate kx over the
    # whole line instead of the first Brillouin zone.
    return N == 0 and grating.is_planar


@dataclass
class _Acc:
    cond: float = 0.0
    imag: float = 0.0
    evaluated: int = 0
    skipped: int = 0


def _kx_rule(grating, quad, L):
    if _unfolded(grating, quad.N):
        return _halfline(quad.kx_nodes, quad.ky_map_scale or 1.0 / (2 * L))
    # same rational map as ky, truncated at the zone edge
    edge = math.pi / grating.period
    s = quad.ky_map_scale or 1.0 / (2 * L)
    t, w = _gauss(quad.kx_nodes, 0.0, edge / (edge + s))
    return s * t / (1 - t), w * s / (1 - t) ** 2


def _task(xi, kx, w_kx, ky, w_ky, L, plate, grating, quad, track_cond):
    """Weighted sum over ky of the trace at one (xi, kx); returns (value, stats)."""
    N = quad.N
    if _unfolded(grating, N):
        period = max(grating.period, 4 * math.pi * max(abs(kx), 1.0))
        grating = _with_period(grating, period)
    kap = _kappa(grating, xi, kx, ky, N)
    keep = np.exp(-2 * kap.min(axis=-1) * L) >= quad.skip_tol
    stats = (0.0, 0.0, int(keep.sum()), int((~keep).sum()))
    if not keep.any():
        return 0.0, stats
    Rp, Rg, kp, p = _parts(xi, kx, ky[keep], L, plate, grating, N, quad.zero_method)
    tr, one_m = _trace(Rp, Rg, kp, p)
    cond = float(np.max(np.linalg.cond(one_m))) if track_cond else float("nan")
    ref = np.maximum(np.abs(tr), 1e-300)
    imag = float(np.max(np.abs(tr.imag) / ref))
    val = float(np.sum(w_ky[keep] * tr.real)) * w_kx
    return val, (cond, imag, stats[2], stats[3])


def _with_period(g: GratingSpec, period: float) -> GratingSpec:
    from dataclasses import replace

    return replace(g, period=period)


def _run(tasks, threads):
    if threads is None:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(tasks) == 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(t) for t in tasks]
        return [f.result() for f in futures]  # fixed order


def _frequency_term(xi, L, plate, grating, quad, threads, acc, track_cond):
    """int_BZ dkx int dky tr[...] over kx >= 0, ky >= 0, doubled twice."""
    kx, wkx = _kx_rule(grating, quad, L)
    s = quad.ky_map_scale or 1.0 / (2 * L)
    ky, wky = _halfline(quad.ky_nodes, s)
    tasks = [
        (lambda kxi=kxi, wi=wi: _task(xi, kxi, wi, ky, wky, L, plate, grating, quad, track_cond))
        for kxi, wi in zip(kx, wkx)
    ]
    total = 0.0
    for val, (cond, imag, ev, sk) in _run(tasks, threads):
        total += val
        acc.cond = max(acc.cond, cond) if not math.isnan(cond) else acc.cond
        acc.imag = max(acc.imag, imag)
        acc.evaluated += ev
        acc.skipped += sk
    return 4.0 * total


def matsubara_frequency(n: int, T: float) -> float:
    return 2 * math.pi * n * KB * T / HBAR


def force_pressure(L: float, T: float, plate: PlanarStack, grating: GratingSpec,
                   quad: QuadratureSpec | None = None, threads: int | None = 1,
                   track_condition: bool = False) -> ForcePoint:
    """Casimir pressure at temperature T > 0 (Matsubara sum)."""
    quad = quad or QuadratureSpec()
    if not T > 0:
        raise ValueError("T must be > 0; use force_pressure_T0")
    if not L > 0:
        raise ValueError("L must be > 0")
    _check_media(plate, grating)
    if _is_transparent(grating) or plate.plate == plate.gap:
        diag = Diagnostics(quad.N, 0, float("nan"), 0.0)
        return ForcePoint(L, T, 0.0, (0.0,), diag, quad)
    acc = _Acc()
    pref = -PRESSURE_PREFACTOR * KB * T
    terms = []
    total = 0.0
    xi_floor = 5 * C / (2 * L)
    tail = float("inf")
    for n in range(N_CAP + 1):
        xi = matsubara_frequency(n, T)
        if math.exp(-2 * xi * L / C) < quad.skip_tol:
            tail = 0.0
            break
        term = pref * _frequency_term(xi, L, plate, grating, quad, threads, acc, track_condition)
        terms.append(term)
        total += 0.5 * term if n == 0 else term
        if n >= 2 and xi > xi_floor and abs(term) < quad.n_max_rule * abs(total):
            tail = _geometric_tail(terms)
            break
    else:
        tail = _geometric_tail(terms)
    total, tail = float(total), float(tail)
    terms = [float(t) for t in terms]
    diag = Diagnostics(quad.N, len(terms) - 1, acc.cond if track_condition else float("nan"),
                       tail, acc.imag, acc.evaluated, acc.skipped)
    point = ForcePoint(L, T, total, tuple(terms), diag, quad)
    if tail > quad.rel_tol * abs(total):
        raise ConvergenceError(f"Matsubara tail {tail:.3g} exceeds rel_tol at L={L}", point)
    return point


def _geometric_tail(terms):
    if len(terms) < 3:
        return abs(terms[-1]) if terms else 0.0
    a, b = abs(terms[-2]), abs(terms[-1])
    r = b / a if a > 0 else 0.0
    if r >= 1:
        return float("inf")
    return b * r / (1 - r)


def force_pressure_T0(L: float, plate: PlanarStack, grating: GratingSpec,
                      quad: QuadratureSpec | None = None, threads: int | None = 1,
                      track_condition: bool = False) -> ForcePoint:
    """Casimir pressure at T = 0 (frequency integral on a log-type map)."""
    quad = quad or QuadratureSpec()
    if not L > 0:
        raise ValueError("L must be > 0")
    _check_media(plate, grating)
    if _is_transparent(grating) or plate.plate == plate.gap:
        return ForcePoint(L, 0.0, 0.0, (), Diagnostics(quad.N, 0, float("nan"), 0.0), quad)
    acc = _Acc()
    xi, wxi = _halfline(quad.xi_nodes, C / (2 * L))
    pref = -PRESSURE_PREFACTOR * HBAR / (2 * math.pi)
    contrib = []
    for x, w in zip(xi, wxi):
        if math.exp(-2 * x * L / C) < quad.skip_tol:
            contrib.append(0.0)
            continue
        contrib.append(pref * w * _frequency_term(x, L, plate, grating, quad, threads, acc,
                                                  track_condition))
    total = float(sum(contrib))
    # the last node bounds the mass left beyond the mapped range; a skipped
    # last node is bounded by the skip threshold
    tail = float(abs(contrib[-1]) if contrib and contrib[-1] != 0.0 else quad.skip_tol * abs(total))
    diag = Diagnostics(quad.N, 0, acc.cond if track_condition else float("nan"), tail,
                       acc.imag, acc.evaluated, acc.skipped)
    point = ForcePoint(L, 0.0, total, (), diag, quad)
    if tail > quad.rel_tol * abs(total):
        raise ConvergenceError(f"frequency integral not converged at L={L}", point)
    return point


def pressure(L: float, T: float, plate: PlanarStack, grating: GratingSpec,
             quad: QuadratureSpec | None = None, threads: int | None = 1, **kw) -> ForcePoint:
    """Dispatch to the Matsubara sum (T > 0) or the T = 0 integral."""
    if T == 0:
        return force_pressure_T0(L, plate, grating, quad, threads, **kw)
    return force_pressure(L, T, plate, grating, quad, threads, **kw)
