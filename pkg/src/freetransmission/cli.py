"""Command-line experiments: solve, certify, check, modulus, approx, sweep.

Every run is driven by a JSON config whose sections mirror the module types.
Outputs are flat files (JSON and CSV) stamped with the config hash and the
package version. Exit codes: 0 ok, 2 numerical failure, 3 config error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import itertools
import json
import logging
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .degeneracy import (DegeneracyLaw, ModulusSpec, NoAdmissibleRadius, delta1_threshold,
                         modulus_condition_holds)
from .elliptic import KINDS, EllipticOperator
from .grid import GridSpec, ScalarField
from .regularity import (DegenerateFit, RadiusUnderResolved, ResolutionError, TooFewNodes, certify,
                         normalize, predicted_local, predicted_pointwise)
from .solver import (NonConvergence, ProblemSpec, SolveConfig, StepUnstable, manufactured_radial, solve,
                     solve_homogeneous)
from .viscosity import (DEFAULT_TOLERANCE_CONSTANT, envelope_sub_check, envelope_super_check,
                        homogeneous_division_check)

log = logging.getLogger("freetransmission")

OUT_ENV = "FREETRANSMISSION_OUT"
EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 2, 3
REFERENCE_EPS = (1e-2, 1e-3)

DEFAULTS: dict = {
    "grid": {"d": 2, "n": 65},
    "operator": {"kind": "negative_trace", "lambda": 1.0, "Lambda": 1.0, "alpha0": 1.0},
    "law": {"complement": {"kind": "constant", "value": 1.0}, "beta_m": 1.0, "beta_M": 1.0,
            "modulus": {"kind": "zero"}},
    "rhs": {"kind": "manufactured"},
    "boundary": {"kind": "manufactured"},
    "solve": {"step": None, "step_factor": 0.9, "tol": 1e-3, "max_iters": 200_000, "continuation": None, "reg_eps": None},
    "certify": {"points": [[0.0, 0.0]], "rho": 0.5, "eta": 0.01, "kmax": None, "eps0": 1.0,
                "field": "solution", "K": 1.0, "exponent_tol": 0.07},
    "check": {"trials": 10_000, "window": 5, "tolerance_constant": DEFAULT_TOLERANCE_CONSTANT,
              "mode": "phases"},
    "modulus": {"eps": [1e-2, 1e-3]},
    "approx": {"eps": [1e-1, 1e-2, 1e-3, 1e-4], "tol": 1e-4, "homogeneous_boundary": None},
    "sweep": {},
    "seed": 0,
    "output": "out",
}


# sections replaced wholesale instead of merged key by key
FREE_FORM = ("law", "sweep", "rhs", "boundary", "certify.points", "approx.homogeneous_boundary")


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(val, dict) and isinstance(base[key], dict) and where not in FREE_FORM:
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


@dataclass
class ExperimentConfig:
    raw: dict
    grid: GridSpec
    operator: EllipticOperator
    law: DegeneracyLaw
    solve: SolveConfig
    reg_eps: float | None
    seed: int
    output: Path

    @property
    def sha256(self) -> str:
        return config_hash(self.raw)

    @property
    def stamp(self) -> dict:
        return {"config_sha256": self.sha256, "version": __version__}


def _number(cfg: dict, section: str, key: str, lo: float | None = None, hi: float | None = None,
            allow_none: bool = False, integer: bool = False):
    val = cfg[section][key]
    name = f"{section}.{key}"
    if val is None:
        if allow_none:
            return None
        raise ConfigError(f"{name} is required")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if integer and int(val) != val:
        raise ConfigError(f"{name} must be an integer")
    if (lo is not None and val < lo) or (hi is not None and val > hi) or not math.isfinite(val):
        raise ConfigError(f"{name} must lie in [{lo}, {hi}]")
    return int(val) if integer else float(val)


def build_config(user: dict, out: str | None = None, seed: int | None = None,
                 points: list | None = None) -> ExperimentConfig:
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    cfg = _merge(DEFAULTS, user)
    if seed is not None:
        cfg["seed"] = seed
    if points is not None:
        cfg["certify"]["points"] = points
    if out is not None:
        cfg["output"] = out
    elif os.environ.get(OUT_ENV):
        cfg["output"] = os.environ[OUT_ENV]

    d, n = cfg["grid"]["d"], cfg["grid"]["n"]
    if d not in (1, 2, 3) or isinstance(d, bool):
        raise ConfigError("grid.d must be 1, 2 or 3")
    if not isinstance(n, int) or isinstance(n, bool) or n < 5 or n % 2 == 0:
        raise ConfigError("grid.n must be odd ≥ 5")
    grid = GridSpec(d, n)

    op = cfg["operator"]
    if op.get("kind") not in KINDS:
        raise ConfigError(f"operator.kind must be one of {', '.join(KINDS)}")
    try:
        operator = EllipticOperator.from_config(op, d)
    except ValueError as exc:
        raise ConfigError(f"operator: {exc}") from None
    try:
        law = DegeneracyLaw.from_config(cfg["law"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"law: {exc}") from None

    for key in ("rhs", "boundary"):
        kinds = ("constant", "manufactured", "table") if key == "rhs" else ("manufactured", "polynomial", "table")
        if cfg[key].get("kind") not in kinds:
            raise ConfigError(f"{key}.kind must be one of {', '.join(kinds)}")

    s = cfg["solve"]
    cont = s["continuation"]
    if cont is not None and (not isinstance(cont, list) or not cont):
        raise ConfigError("solve.continuation must be a nonempty list or null")
    try:
        solve_cfg = SolveConfig(step=_number(cfg, "solve", "step", 0, None, allow_none=True),
                                step_factor=_number(cfg, "solve", "step_factor", 0, None),
                                tol=_number(cfg, "solve", "tol", 0, None),
                                max_iters=_number(cfg, "solve", "max_iters", 1, None, integer=True),
                                continuation=None if cont is None else tuple(cont))
        if cont is not None:
            solve_cfg.schedule(0.0)
    except ValueError as exc:
        raise ConfigError(f"solve: {exc}") from None
    reg_eps = _number(cfg, "solve", "reg_eps", 0, None, allow_none=True)

    c = cfg["certify"]
    _number(cfg, "certify", "rho", 0, 1)
    if not c["rho"] < 1 or not c["rho"] > 0:
        raise ConfigError("certify.rho must lie in (0, 1)")
    _number(cfg, "certify", "eta", 0, operator.alpha0)
    _number(cfg, "certify", "eps0", 0, None)
    _number(cfg, "certify", "kmax", 1, 60, allow_none=True, integer=True)
    if c["field"] not in ("solution", "synthetic"):
        raise ConfigError("certify.field must be 'solution' or 'synthetic'")
    _certify_points(cfg, d)

    ch = cfg["check"]
    _number(cfg, "check", "trials", 1, None, integer=True)
    _number(cfg, "check", "window", 1, None, integer=True)
    if ch["mode"] not in ("phases", "bounds"):
        raise ConfigError("check.mode must be 'phases' or 'bounds'")
    for key in ("modulus", "approx"):
        eps = cfg[key]["eps"]
        if not isinstance(eps, list) or not eps or any(not isinstance(e, (int, float)) or e < 0 for e in eps):
            raise ConfigError(f"{key}.eps must be a nonempty list of nonnegative numbers")
    hb = cfg["approx"]["homogeneous_boundary"]
    if hb is not None and hb != cfg["boundary"]:
        raise ConfigError("approx.homogeneous_boundary must match boundary")
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    return ExperimentConfig(cfg, grid, operator, law, solve_cfg, reg_eps, seed, Path(cfg["output"]))


def _certify_points(cfg: dict, d: int) -> list[tuple[float, ...]]:
    pts = cfg["certify"]["points"]
    if isinstance(pts, dict):
        lat = pts.get("lattice")
        if not isinstance(lat, dict):
            raise ConfigError("certify.points must be a list or {'lattice': {spacing, count}}")
        count, spacing = lat.get("count"), lat.get("spacing")
        if not isinstance(count, int) or count < 1 or not isinstance(spacing, (int, float)) or spacing <= 0:
            raise ConfigError("certify.points.lattice needs a positive integer count and positive spacing")
        offs = (np.arange(count) - (count - 1) / 2) * spacing
        out = [tuple(float(v) for v in p) for p in itertools.product(offs, repeat=d)]
    elif isinstance(pts, list) and pts:
        out = []
        for p in pts:
            if not isinstance(p, (list, tuple)) or len(p) != d:
                raise ConfigError(f"certify.points entries must have {d} coordinates")
            out.append(tuple(float(v) for v in p))
    else:
        raise ConfigError("certify.points must be a nonempty list")
    for p in out:
        if math.hypot(*p) >= 1:
            raise ConfigError("certify.points must lie inside the unit ball")
    return out


def parse_points(text: str) -> list[list[float]]:
    try:
        return [[float(v) for v in chunk.split(",")] for chunk in text.split(";") if chunk.strip()]
    except ValueError:
        raise ConfigError(f"--points could not be parsed: {text!r}") from None


# problem assembly


def _constant_beta(exp: ExperimentConfig) -> float:
    law = exp.law
    if law.phases or law.complement.kind != "constant":
        raise ConfigError("manufactured rhs/boundary need a single constant exponent in law.complement")
    if exp.operator.kind != "negative_trace":
        raise ConfigError("manufactured rhs/boundary need operator.kind = negative_trace")
    return law.complement.value


def _table(exp: ExperimentConfig, section: str) -> np.ndarray:
    vals = np.asarray(exp.raw[section].get("values"), dtype=float)
    if vals.shape != exp.grid.shape:
        raise ConfigError(f"{section}.values must have shape {exp.grid.shape}")
    return vals


def _polynomial(terms):
    """sum of c * prod x_j^p_j from [{"coef": c, "powers": [p_1, ..]}, ...]."""
    def fn(x):
        out = np.zeros(x.shape[1:])
        for t in terms:
            mono = np.ones(x.shape[1:])
            for j, p in enumerate(t["powers"]):
                mono = mono * x[j] ** p
            out = out + float(t["coef"]) * mono
        return out
    return fn


def boundary_data(exp: ExperimentConfig):
    b = exp.raw["boundary"]
    if b["kind"] == "manufactured":
        return manufactured_radial(_constant_beta(exp), d=exp.grid.d).u
    if b["kind"] == "polynomial":
        terms = b.get("terms")
        if not isinstance(terms, list) or any(len(t.get("powers", ())) != exp.grid.d for t in terms):
            raise ConfigError(f"boundary.terms must list {{coef, powers}} with {exp.grid.d} powers each")
        return _polynomial(terms)
    return ScalarField(exp.grid, _table(exp, "boundary"))


def rhs_field(exp: ExperimentConfig) -> ScalarField:
    r = exp.raw["rhs"]
    g = exp.grid
    if r["kind"] == "manufactured":
        return ScalarField.from_function(g, manufactured_radial(_constant_beta(exp), d=g.d).f)
    if r["kind"] == "constant":
        if not isinstance(r.get("value"), (int, float)):
            raise ConfigError("rhs.value must be a number")
        return ScalarField(g, np.full(g.shape, float(r["value"])))
    return ScalarField(g, _table(exp, "rhs"))


def problem(exp: ExperimentConfig) -> ProblemSpec:
    return ProblemSpec(exp.operator, exp.law, rhs_field(exp), boundary_data(exp), reg_eps=exp.reg_eps)


# output helpers


def _write_json(path: Path, data: dict, exp: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({**exp.stamp, **data}, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list], exp: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"# config_sha256={exp.sha256} version={__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


# subcommands


def cmd_solve(exp: ExperimentConfig) -> ScalarField:
    spec = problem(exp)
    t0 = time.perf_counter()
    res = solve(spec, exp.solve)
    elapsed = time.perf_counter() - t0
    out = exp.output
    _write_json(out / "solution.json", {"field": json.loads(res.u.to_json())}, exp)
    _write_json(out / "diagnostics.json", {**res.diagnostics(), "seconds": elapsed}, exp)
    _write_csv(out / "residual_history.csv", ["iteration", "residual"], [list(h) for h in res.history], exp)
    log.info("solved in %d iterations, residual %.3e", res.iterations, res.residual)
    return res.u


def _load_solution(exp: ExperimentConfig) -> ScalarField | None:
    path = exp.output / "solution.json"
    if not path.exists():
        return None
    data = json.loads(path.read_text())
    if data.get("config_sha256") != exp.sha256:
        return None
    return ScalarField.from_json(json.dumps(data["field"]))


def synthetic_field(exp: ExperimentConfig, x0, alpha: float) -> ScalarField:
    """|x - x0|^{1+alpha} plus an affine and a smooth term, a field with a known exponent at x0."""
    g = exp.grid
    x0 = np.asarray(x0, dtype=float).reshape((g.d,) + (1,) * g.d)

    def fn(x):
        r = np.sqrt(np.sum((x - x0) ** 2, axis=0))
        return r ** (1 + alpha) + 0.3 * x[0] - 0.2 * x[-1] + 0.1 * np.sin(x[0] + 2 * x[-1])

    return ScalarField.from_function(g, fn)


def cmd_certify(exp: ExperimentConfig, threads: int = 1) -> int:
    c = exp.raw["certify"]
    points = _certify_points(exp.raw, exp.grid.d)
    alpha0 = exp.operator.alpha0
    field = None
    if c["field"] == "solution":
        field = _load_solution(exp)
        if field is None:
            field = cmd_solve(exp)
        field = normalize(field, rhs_field(exp), c["eps0"]).u_bar

    def one(x0):
        u = field if field is not None else synthetic_field(
            exp, exp.grid.axis[list(exp.grid.index_of(x0))],
            predicted_pointwise(exp.law, x0, alpha0, c["eta"]))
        try:
            rep = certify(u, x0, exp.law, alpha0=alpha0, eta=c["eta"], rho=c["rho"], kmax=c["kmax"], K=c["K"],
                          exponent_tol=c["exponent_tol"], seed=exp.seed)
            return rep, None
        except (RadiusUnderResolved, TooFewNodes, ResolutionError, DegenerateFit) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(one, points))

    out = exp.output
    local = predicted_local(exp.law.beta_M, alpha0, c["eta"])
    summary, emap, failed = [], [], False
    for i, (x0, (rep, err)) in enumerate(zip(points, results)):
        pw = predicted_pointwise(exp.law, x0, alpha0, c["eta"])
        if rep is None:
            failed = True
            _write_json(out / "reports" / f"point_{i:03d}.json", {"point": list(x0), "error": err}, exp)
            summary.append([*x0, pw, None, None, None, None, None, None, err])
            emap.append([*x0, pw, local, None])
            continue
        _write_json(out / "reports" / f"point_{i:03d}.json", rep.to_dict(), exp)
        _write_csv(out / "reports" / f"iterations_{i:03d}.csv",
                   ["k", "radius", "alpha_k", "a_k"] + [f"b_k_{j}" for j in range(exp.grid.d)]
                   + ["sup_err", "bound", "pass"],
                   [[r.k, r.radius, r.alpha_k, r.ell.a, *r.ell.b, r.sup_err, r.bound, r.passed] for r in rep.rows],
                   exp)
        v = rep.verdicts
        summary.append([*x0, rep.predicted_alpha, rep.predicted_alpha_active, rep.fitted_alpha, rep.K_star,
                        v["iteration_bounds_hold"], v["coefficients_cauchy"], v["exponent_match"], rep.note])
        emap.append([*x0, pw, local, rep.fitted_alpha])
    coords = ["x", "y", "z"][:exp.grid.d]
    _write_csv(out / "certify.csv", coords + ["predicted_alpha", "predicted_alpha_active", "fitted_alpha", "K_star",
                                              "iteration_bounds_hold", "coefficients_cauchy", "exponent_match",
                                              "note"], summary, exp)
    _write_csv(out / "exponent_map.csv", coords + ["pointwise", "local", "fitted"], emap, exp)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_check(exp: ExperimentConfig) -> int:
    ch = exp.raw["check"]
    u = _load_solution(exp)
    if u is None:
        u = cmd_solve(exp)
    spec = problem(exp)
    kw = dict(trials=ch["trials"], seed=exp.seed, window=ch["window"])
    sub = envelope_sub_check(u, spec, tolerance_constant=ch["tolerance_constant"], mode=ch["mode"], **kw)
    sup = envelope_super_check(u, spec, tolerance_constant=ch["tolerance_constant"], mode=ch["mode"], **kw)
    data = {"sub": sub.to_dict(), "super": sup.to_dict()}
    if spec.rhs.sup() == 0.0:
        data["division"] = homogeneous_division_check(u, exp.operator, **kw).to_dict()
    _write_json(exp.output / "check.json", data, exp)
    _write_csv(exp.output / "check.csv", ["side", "trials", "touching", "violations", "worst_margin", "tolerance"],
               [[r.side, r.trials, r.touching, len(r.violations), r.worst_margin, r.tolerance] for r in (sub, sup)],
               exp)
    return EXIT_OK


def modulus_table(omega: ModulusSpec, eps_list) -> list[list]:
    rows = []
    for eps in eps_list:
        try:
            rows.append([eps, delta1_threshold(omega, eps), "ok"])
        except NoAdmissibleRadius:
            rows.append([eps, None, "no admissible rho"])
    return rows


def cmd_modulus(exp: ExperimentConfig) -> int:
    omega = exp.law.modulus
    eps_list = [float(e) for e in exp.raw["modulus"]["eps"]]
    if omega.kind == "sqrt":
        eps_list += [e for e in REFERENCE_EPS if e not in eps_list]
    rows = modulus_table(omega, eps_list)
    cond = modulus_condition_holds(omega)
    print(f"modulus {omega.kind}: ln(1/t) omega(t) -> 0 {'holds' if cond.passed else 'fails'}")
    print(f"{'eps':>12}  {'delta1':>14}  status")
    for eps, d1, status in rows:
        print(f"{eps:>12.4g}  {'-' if d1 is None else format(d1, '.6g'):>14}  {status}")
    _write_csv(exp.output / "modulus.csv", ["eps", "delta1", "status"], rows, exp)
    return EXIT_OK


def approx_distances(exp: ExperimentConfig) -> list[list]:
    a = exp.raw["approx"]
    cfg = SolveConfig(step=exp.solve.step, step_factor=exp.solve.step_factor, tol=float(a["tol"]), max_iters=exp.solve.max_iters,
                      continuation=exp.solve.continuation)
    g = exp.grid
    bd = boundary_data(exp)
    h = solve_homogeneous(exp.operator, bd, g, cfg)
    half = g.ball(np.zeros(g.d), 0.5)
    rows = []
    for eps in a["eps"]:
        spec = ProblemSpec(exp.operator, exp.law, ScalarField(g, np.full(g.shape, -float(eps))), bd,
                           reg_eps=exp.reg_eps)
        res = solve(spec, cfg)
        dist = float(np.max(np.abs(res.u.values - h.values)[half]))
        rows.append([float(eps), dist, res.iterations, res.residual])
    return rows


def cmd_approx(exp: ExperimentConfig) -> int:
    rows = approx_distances(exp)
    _write_csv(exp.output / "approx.csv", ["eps", "distance", "iterations", "residual"], rows, exp)
    return EXIT_OK


COMMANDS = ("solve", "certify", "check", "modulus", "approx")


def _set_dotted(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def cmd_sweep(user: dict, out: Path, seed: int | None, threads: int) -> int:
    """Cartesian product over the dotted-key lists in ``sweep.params``; runs ``sweep.command`` for each."""
    spec = user.get("sweep", {})
    params = spec.get("params", {})
    command = spec.get("command", "solve")
    if command not in COMMANDS:
        raise ConfigError(f"sweep.command must be one of {', '.join(COMMANDS)}")
    if not isinstance(params, dict) or not params or any(not isinstance(v, list) for v in params.values()):
        raise ConfigError("sweep.params must map dotted keys to lists")
    keys = sorted(params)
    base = {k: v for k, v in user.items() if k != "sweep"}
    rows, status = [], EXIT_OK
    for i, combo in enumerate(itertools.product(*(params[k] for k in keys))):
        cfg = copy.deepcopy(base)
        for k, v in zip(keys, combo):
            _set_dotted(cfg, k, v)
        exp = build_config(cfg, out=str(out / f"run_{i:03d}"), seed=seed)
        code = _dispatch(command, exp, threads)
        status = max(status, code)
        rows.append([i, *combo, exp.sha256, code])
    stamp = build_config(base, out=str(out), seed=seed)
    _write_csv(out / "sweep.csv", ["run", *keys, "config_sha256", "exit_code"], rows, stamp)
    return status


def _dispatch(command: str, exp: ExperimentConfig, threads: int) -> int:
    try:
        if command == "solve":
            cmd_solve(exp)
            return EXIT_OK
        if command == "certify":
            return cmd_certify(exp, threads)
        if command == "check":
            return cmd_check(exp)
        if command == "modulus":
            return cmd_modulus(exp)
        return cmd_approx(exp)
    except (NonConvergence, StepUnstable) as exc:
        _write_json(exp.output / "failure.json", {"error": type(exc).__name__, "detail": str(exc)}, exp)
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freetransmission", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("sweep",):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON experiment config")
        s.add_argument("--out", help="output directory (overrides config and environment)")
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--points", help='certification points, "x,y;x,y"')
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    warnings.showwarning = lambda message, *_args, **_kw: log.warning("%s", message)
    try:
        user = json.loads(args.config.read_text()) if args.config else {}
        if args.command == "sweep":
            out = Path(args.out or os.environ.get(OUT_ENV) or user.get("output", "out"))
            return cmd_sweep(user, out, args.seed, args.threads)
        points = parse_points(args.points) if args.points else None
        exp = build_config(user, out=args.out, seed=args.seed, points=points)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _dispatch(args.command, exp, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
