"""Command-line front end.

    python3 -m thermal_casimir force    --config run.ini [--out F] [--format csv|json]
    python3 -m thermal_casimir sweep    --config run.ini
    python3 -m thermal_casimir ratio    --config run.ini
    python3 -m thermal_casimir converge --config run.ini
    python3 -m thermal_casimir overlay  --config run.ini
    python3 -m thermal_casimir validate [--N 8]

Configs are INI files (see configs/). Any key can be overridden from the
environment as TCASIMIR_<SECTION>__<KEY>=value. Exit codes: 0 success,
1 configuration error, 2 convergence or validation failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, engine
from . import materials as mat
from . import planar, rcwa
from .engine import QuadratureSpec

ENV_PREFIX = "TCASIMIR_"
EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2

MATERIAL_SECTIONS = ("plate", "ridge", "substrate", "groove")
MATERIAL_KEYS = {"model", "plasma_frequency", "relaxation_rate", "eps", "table"}
SCHEMA = {
    "geometry": {"period", "depth", "filling_factor"},
    "grid": {"L", "a", "T"},
    "quadrature": {f.name for f in dataclasses.fields(QuadratureSpec)},
    "run": {"ratio", "sphere_radius", "experiment", "converge_N", "converge_T"},
    **{s: MATERIAL_KEYS for s in MATERIAL_SECTIONS},
}
REQUIRED = {"geometry": {"period", "depth", "filling_factor"}, "grid": {"L", "T"}}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    plate: planar.PlanarStack
    grating: rcwa.GratingSpec
    L_values: tuple
    a_values: tuple
    T_values: tuple
    quad: QuadratureSpec
    ratio: str = "theta"
    sphere_radius: float | None = None
    experiment: str | None = None
    converge_N: tuple = (8, 12, 16, 20)
    converge_T: float = 0.0
    hash: str = ""
    raw: dict = field(default_factory=dict)


# ---------------------------------------------------------------- parsing

def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=")[0].split(":")[0].strip() == key:
            return i
    return None


def _floats(value: str, where: str) -> tuple:
    try:
        vals = tuple(float(v) for v in value.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{where}: expected numbers, got {value!r}") from exc
    if not vals:
        raise ConfigError(f"{where}: empty list")
    return vals


def _float(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from exc


def _material(sec: dict, where: str, base_dir: str) -> mat.PermittivityModel:
    model = sec.get("model", "").strip().lower()
    num = lambda k: _float(sec[k], f"{where}.{k}") if k in sec else None  # noqa: E731
    try:
        if model == "vacuum":
            return mat.vacuum()
        if model == "perfect_mirror":
            return mat.perfect_mirror()
        if model == "gold":
            kw = {k: num(k) for k in ("plasma_frequency", "relaxation_rate") if k in sec}
            return mat.gold(**kw)
        if model == "doped_silicon":
            kw = {k: num(k) for k in ("plasma_frequency", "relaxation_rate") if k in sec}
            return mat.doped_silicon(**kw)
        if model == "intrinsic_silicon":
            return mat.intrinsic_silicon()
        if model == "drude":
            return mat.drude(num("plasma_frequency"), num("relaxation_rate"))
        if model == "constant":
            return mat.constant(num("eps"))
        if model == "tabulated":
            path = os.path.join(base_dir, sec["table"])
            return mat.load_table(path, num("plasma_frequency"), num("relaxation_rate"))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{where}: missing parameter for model {model!r} ({exc})") from exc
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.model: unknown material model {model!r}")


def _read_raw(text: str, path: str, env) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = {s: dict(cp[s]) for s in cp.sections()}
    for s, keys in raw.items():
        if s not in SCHEMA:
            raise ConfigError(f"{path}:{_line_of(text, s, '') or '?'}: unknown section [{s}]")
        for k in keys:
            if k not in SCHEMA[s]:
                raise ConfigError(f"{path}:{_line_of(text, s, k)}: unknown key {k!r} in [{s}]")
    for name, value in sorted(env.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):]
        if "__" not in rest:
            continue
        s, k = rest.split("__", 1)
        s = s.lower()
        keys = {kk.lower(): kk for kk in SCHEMA.get(s, ())}
        if k.lower() not in keys:
            raise ConfigError(f"environment {name}: unknown key")
        raw.setdefault(s, {})[keys[k.lower()]] = value
    return raw


def load_config(path: str, env=None) -> RunConfig:
    """Parse and validate a run configuration."""
    env = os.environ if env is None else env
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = _read_raw(text, path, env)
    for s, keys in REQUIRED.items():
        missing = keys - set(raw.get(s, {}))
        if missing:
            raise ConfigError(f"{path}: [{s}] is missing {sorted(missing)}")
    base = os.path.dirname(os.path.abspath(path))
    g = raw["geometry"]
    mats = {}
    for s in MATERIAL_SECTIONS:
        if s in raw:
            mats[s] = _material(raw[s], s, base)
    if "plate" not in mats or "ridge" not in mats:
        raise ConfigError(f"{path}: [plate] and [ridge] sections are required")
    grid = raw["grid"]
    a_values = _floats(grid["a"], "grid.a") if "a" in grid else (
        _float(g["depth"], "geometry.depth"),)
    qkw = {}
    for k, v in raw.get("quadrature", {}).items():
        if k == "zero_method":
            qkw[k] = v.strip()
        elif k in ("N", "kx_nodes", "ky_nodes", "xi_nodes"):
            qkw[k] = int(_float(v, f"quadrature.{k}"))
        else:
            qkw[k] = _float(v, f"quadrature.{k}")
    try:
        quad = QuadratureSpec(**qkw)
        grating = rcwa.GratingSpec(
            period=_float(g["period"], "geometry.period"),
            depth=_float(g["depth"], "geometry.depth"),
            filling_factor=_float(g["filling_factor"], "geometry.filling_factor"),
            ridge=mats["ridge"],
            substrate=mats.get("substrate", mats["ridge"]),
            groove=mats.get("groove", mat.vacuum()),
        )
        plate = planar.PlanarStack(mats["plate"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    run = raw.get("run", {})
    ratio = run.get("ratio", "theta").strip().lower()
    if ratio not in ("theta", "eta"):
        raise ConfigError(f"{path}: run.ratio must be theta or eta")
    cfg = RunConfig(
        plate=plate,
        grating=grating,
        L_values=_floats(grid["L"], "grid.L"),
        a_values=a_values,
        T_values=_floats(grid["T"], "grid.T"),
        quad=quad,
        ratio=ratio,
        sphere_radius=_float(run["sphere_radius"], "run.sphere_radius") if "sphere_radius" in run else None,
        experiment=os.path.join(base, run["experiment"]) if "experiment" in run else None,
        converge_N=tuple(int(v) for v in _floats(run["converge_N"], "run.converge_N"))
        if "converge_N" in run else (8, 12, 16, 20),
        converge_T=_float(run["converge_T"], "run.converge_T") if "converge_T" in run else 0.0,
        raw=raw,
    )
    if any(L <= 0 for L in cfg.L_values) or any(T < 0 for T in cfg.T_values):
        raise ConfigError(f"{path}: L must be > 0 and T >= 0")
    if any(a < 0 for a in cfg.a_values):
        raise ConfigError(f"{path}: depths must be >= 0")
    cfg.hash = config_hash(raw)
    return cfg


def config_hash(raw: dict) -> str:
    canon = json.dumps({s: dict(sorted(v.items())) for s, v in sorted(raw.items())},
                       sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ----------------------------------------------------------------- output

def _diag_fields(p: engine.ForcePoint) -> dict:
    d = p.diagnostics
    return {
        "N_used": d.N_used,
        "n_max_used": d.n_max_used,
        "worst_condition": d.worst_condition,
        "tail_estimate": d.tail_estimate,
        "max_imag_ratio": d.max_imag_ratio,
        "converged": p.converged,
    }


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.generic):
        return str(v.item())
    return str(v)


def write_records(records, fmt: str, out, columns=None):
    if fmt == "json":
        json.dump(records, out, indent=1, sort_keys=True, default=_json_default)
        out.write("\n")
        return
    if not records:
        out.write("\n" if columns is None else ",".join(columns) + "\n")
        return
    columns = columns or [k for k in records[0] if not isinstance(records[0][k], (list, dict))]
    out.write(",".join(columns) + "\n")
    for r in records:
        out.write(",".join(_fmt(r.get(c, "")) for c in columns) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


def _force_record(cfg, a, p: engine.ForcePoint, **extra):
    rec = {"config_hash": cfg.hash, "L": p.L, "a": a, "T": p.T, "pressure": p.pressure}
    rec.update(extra)
    rec.update(_diag_fields(p))
    rec["per_n_terms"] = list(p.per_n_terms)
    return rec


def _grating(cfg, a):
    return dataclasses.replace(cfg.grating, depth=a)


def _pressure(cfg, L, a, T, threads, failures):
    try:
        return engine.pressure(L, T, cfg.plate, _grating(cfg, a), cfg.quad, threads)
    except engine.ConvergenceError as exc:
        failures.append(str(exc))
        return exc.point


# ---------------------------------------------------------------- commands

def cmd_force(cfg: RunConfig, threads: int):
    failures, records = [], []
    for a in cfg.a_values:
        for L in cfg.L_values:
            for T in cfg.T_values:
                p = _pressure(cfg, L, a, T, threads, failures)
                if cfg.sphere_radius:
                    sg = analysis.sphere_gradient(p.pressure, L, cfg.sphere_radius)
                    records.append(_force_record(cfg, a, p, sphere_gradient=sg.value,
                                                 warning=sg.warning))
                else:
                    records.append(_force_record(cfg, a, p))
    return records, failures


def _ratio_rows(cfg, threads, kinds):
    failures, records, cache = [], [], {}

    def get(L, a, T):
        if (L, a, T) not in cache:
            cache[(L, a, T)] = _pressure(cfg, L, a, T, threads, failures)
        return cache[(L, a, T)]

    for a in cfg.a_values:
        g = _grating(cfg, a)
        for L in cfg.L_values:
            for T in cfg.T_values:
                for kind in kinds:
                    if kind == "theta":
                        if T == 0:
                            continue
                        r = analysis.theta_F(get(L, a, T), get(L, a, 0.0))
                    else:
                        r = analysis.eta_F(get(L, a, T), cfg.plate, g)
                    p = get(L, a, T)
                    rec = {"config_hash": cfg.hash, "kind": r.kind.value, "L": L, "a": a,
                           "T": T, "value": r.value, "numerator": r.numerator,
                           "denominator": r.denominator}
                    rec.update(_diag_fields(p))
                    records.append(rec)
    return records, failures


def cmd_sweep(cfg: RunConfig, threads: int):
    return _ratio_rows(cfg, threads, (cfg.ratio,))


def cmd_ratio(cfg: RunConfig, threads: int):
    return _ratio_rows(cfg, threads, ("theta", "eta"))


def richardson(xs, ys):
    """Observed order and extrapolated value from the last three points.

    Assumes y(x) = y_inf + C x^-p; returns (p, y_inf), or (nan, y_last) when
    the differences do not shrink.
    """
    if len(ys) < 3:
        return math.nan, ys[-1]
    (x1, x2, x3), (y1, y2, y3) = xs[-3:], ys[-3:]
    d1, d2 = y2 - y1, y3 - y2
    if d1 == 0 or d2 == 0 or abs(d2) >= abs(d1) or d1 * d2 < 0:
        return math.nan, y3
    p = math.log(abs(d1) / abs(d2)) / math.log(x3 / x2) if x3 / x2 == x2 / x1 else \
        math.log(abs(d1) / abs(d2)) / math.log(math.sqrt(x3 / x1))
    r = (x3 / x2) ** p
    return p, y3 + d2 / (r - 1)


def cmd_converge(cfg: RunConfig, threads: int):
    """Pressure vs N and vs doubled node counts at the first (L, a)."""
    failures, records = [], []
    L, a, T = cfg.L_values[0], cfg.a_values[0], cfg.converge_T
    g = _grating(cfg, a)
    Ns, vals = [], []
    for N in cfg.converge_N:
        q = dataclasses.replace(cfg.quad, N=N)
        try:
            p = engine.pressure(L, T, cfg.plate, g, q, threads)
        except engine.ConvergenceError as exc:
            failures.append(str(exc))
            p = exc.point
        Ns.append(N)
        vals.append(p.pressure)
        rec = {"config_hash": cfg.hash, "study": "N", "N": N, "kx_nodes": q.kx_nodes,
               "ky_nodes": q.ky_nodes, "xi_nodes": q.xi_nodes, "L": L, "a": a, "T": T,
               "pressure": p.pressure}
        rec.update(_diag_fields(p))
        records.append(rec)
    order, extrap = richardson([float(n) for n in Ns], vals)
    for r in records:
        r["observed_order"], r["extrapolated"] = order, extrap
    base = cfg.quad
    doubled = dataclasses.replace(base, kx_nodes=2 * base.kx_nodes, ky_nodes=2 * base.ky_nodes,
                                  xi_nodes=2 * base.xi_nodes)
    for label, q in (("nodes", base), ("nodes_doubled", doubled)):
        p = engine.pressure(L, T, cfg.plate, g, q, threads)
        rec = {"config_hash": cfg.hash, "study": label, "N": q.N, "kx_nodes": q.kx_nodes,
               "ky_nodes": q.ky_nodes, "xi_nodes": q.xi_nodes, "L": L, "a": a, "T": T,
               "pressure": p.pressure, "observed_order": math.nan, "extrapolated": math.nan}
        rec.update(_diag_fields(p))
        records.append(rec)
    return records, failures


def cmd_overlay(cfg: RunConfig, threads: int):
    if not cfg.experiment:
        raise ConfigError("overlay needs run.experiment (CSV path)")
    failures, records = [], []
    a = cfg.a_values[0]
    g = _grating(cfg, a)
    T = cfg.T_values[0]
    values = []
    for L in cfg.L_values:
        p = _pressure(cfg, L, a, T, threads, failures)
        values.append(analysis.eta_F(p, cfg.plate, g).value)
    curve = analysis.RatioCurve(cfg.L_values, values, analysis.RatioKind.ETA_F, T)
    try:
        ov = analysis.overlay_experiment(cfg.experiment, curve)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    for r in ov.rows:
        records.append({"config_hash": cfg.hash, "L": r.L, "value": r.value, "sigma": r.sigma,
                        "model": r.model, "residual": r.residual, "skipped": r.skipped,
                        "chi2": ov.chi2, "reduced_chi2": ov.reduced_chi2})
    return records, failures


# --------------------------------------------------------------- validate

@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def run_validation(N: int = 8, normalization_factor: float = 1.0) -> list[Check]:
    """Fast oracle suite; ``normalization_factor`` perturbs the pressure prefactor."""
    checks = []
    saved = engine.PRESSURE_PREFACTOR
    engine.PRESSURE_PREFACTOR = saved * normalization_factor
    try:
        checks.append(_check_slab())
        checks.append(_check_energy())
        checks.append(_check_lifshitz())
        checks.append(_check_derivative())
        checks.append(_check_ideal())
        checks.append(_check_truncation(N))
    finally:
        engine.PRESSURE_PREFACTOR = saved
    return checks


def _check_slab():
    si = mat.doped_silicon()
    spec = rcwa.GratingSpec(400e-9, 200e-9, 1.0, mat.intrinsic_silicon(), si)
    xi, kx, ky = 3e14, 2e6, np.array([1e5, 3e6])
    R = rcwa.grating_reflection(spec, 1j * xi, kx, ky, 4).matrix
    alpha = rcwa.bloch_alpha(kx, spec.period, 4)
    ref = planar.stratified_operator(1.0, complex(mat.eval_imag(spec.ridge, xi)), spec.depth,
                                     complex(mat.eval_imag(si, xi)), 1j * xi, alpha, ky)
    err = np.abs(R - ref).max() / np.abs(ref).max()
    return Check("specular reduction", err < 1e-8, f"max rel error {err:.2e}")


def _check_energy():
    spec = rcwa.GratingSpec(1e-6, 0.3e-6, 0.4, mat.constant(2.25), mat.constant(2.25))
    k0 = 2 * np.pi / 0.8e-6
    worst = 0.0
    for pol in ("e", "h"):
        _, r, t = rcwa.diffraction_efficiencies(spec, k0 * rcwa.C, 0.3 * k0, 0.2 * k0, 10,
                                                polarization=pol)
        worst = max(worst, abs(r.sum() + t.sum() - 1))
    return Check("energy conservation", worst < 1e-6, f"max |sum - 1| {worst:.2e}")


def _check_lifshitz():
    au, si = mat.gold(), mat.doped_silicon()
    g = rcwa.GratingSpec(400e-9, 0.0, 0.5, si, si)
    q = QuadratureSpec(N=0, kx_nodes=24, ky_nodes=32, xi_nodes=32, n_max_rule=1e-7)
    L = 300e-9
    p = engine.force_pressure_T0(L, planar.PlanarStack(au), g, q).pressure
    ref = planar.lifshitz_pressure(L, 0.0, au, si)
    err = abs(p / ref - 1)
    return Check("Lifshitz a=0 match", err < 1e-4, f"rel error {err:.2e}")


def _check_derivative():
    au, si = mat.gold(), mat.doped_silicon()
    g = rcwa.GratingSpec(400e-9, 300e-9, 0.5, si, si)
    plate = planar.PlanarStack(au)
    L, xi, kx, ky, N = 400e-9, 2e14, 1e6, np.array([5e5, 2e6]), 4
    dM = engine.roundtrip_derivative(xi, kx, ky, L, plate, g, N)
    h = 1e-4 * L
    fd = (engine.roundtrip(xi, kx, ky, L + h, plate, g, N)
          - engine.roundtrip(xi, kx, ky, L - h, plate, g, N)) / (2 * h)
    err = np.abs(dM - fd).max() / np.abs(dM).max()
    return Check("analytic dM/dL", err < 1e-6, f"max rel error {err:.2e}")


def _check_ideal():
    pm = mat.perfect_mirror()
    g = rcwa.GratingSpec(400e-9, 0.0, 1.0, pm, pm)
    q = QuadratureSpec(N=0, kx_nodes=24, ky_nodes=32, xi_nodes=32)
    L = 1e-6
    p = engine.force_pressure_T0(L, planar.PlanarStack(pm), g, q).pressure
    err = abs(p / planar.ideal_pressure(L) - 1)
    return Check("ideal-mirror limit", err < 2e-3, f"rel error {err:.2e}")


def _check_truncation(N):
    """Compare N with N + 4 on a paper-like grating; flags under-truncation."""
    au, si = mat.gold(), mat.doped_silicon()
    g = rcwa.GratingSpec(400e-9, 400e-9, 0.5, si, si)
    plate = planar.PlanarStack(au)
    q = QuadratureSpec(N=N, kx_nodes=6, ky_nodes=12, xi_nodes=12)
    L = 300e-9
    p1 = engine.force_pressure_T0(L, plate, g, q).pressure
    p2 = engine.force_pressure_T0(L, plate, g, dataclasses.replace(q, N=N + 4)).pressure
    change = abs(p2 / p1 - 1)
    return Check(f"truncation N={N} vs N={N + 4}", change < 5e-3, f"rel change {change:.2e}")


# ------------------------------------------------------------------- main

COMMANDS = {
    "force": cmd_force,
    "sweep": cmd_sweep,
    "ratio": cmd_ratio,
    "converge": cmd_converge,
    "overlay": cmd_overlay,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="thermal-casimir", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "validate")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        if name == "validate":
            sp.add_argument("--N", type=int, default=8, help="truncation order checked")
            sp.add_argument("--perturb-normalization", type=float, default=1.0,
                            help="multiply the pressure prefactor (fault injection)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.command == "validate":
            checks = run_validation(args.N, args.perturb_normalization)
            recs = [dataclasses.asdict(c) for c in checks]
            write_records(recs, args.format, out, ["name", "passed", "detail"])
            return EXIT_OK if all(c.passed for c in checks) else EXIT_CONVERGENCE
        try:
            cfg = load_config(args.config)
            records, failures = COMMANDS[args.command](cfg, args.threads)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        write_records(records, args.format, out)
        for f in failures:
            print(f"convergence failure: {f}", file=sys.stderr)
        if failures or not all(r.get("converged", True) for r in records):
            return EXIT_CONVERGENCE
        return EXIT_OK
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
