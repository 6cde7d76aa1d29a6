"""Command-line driver.

Subcommands:
  pcp run <cfg.toml>        run a configured simulation
  pcp lab <check> [flags]   run a verification check, write a report CSV
  pcp validate-eos <cfg>    sample the equation-of-state conditions
  pcp mesh-info <file>      print mesh statistics

Exit codes: 0 success, 1 configuration error, 2 admissibility failure.
All floating output uses 17 significant digits.  PCP_SEED seeds random
presets and checks; PCP_THREADS / --threads is accepted for interface
compatibility (execution is serial and deterministic).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .eos import IdealEos, TaubMathewsEos, load_eos_table, \
    validate_eos
from .errors import PcpError, ConfigError, StepError, InadmissibleError, \
    AverageInadmissible
from .geometry import build_cartesian, build_triangular, gauss_rules, \
    load_mesh
from .lab import CounterexampleConfig, check_divergence_growth, \
    check_generalized_splitting, check_odelta_bound, default_seed, \
    run_counterexample
from .limiter import EpsilonSet
from .presets import initial_averages
from .recovery import recover_primitives_batch
from .solver import CflPolicy, DecompositionCache, FieldSolution, \
    diagnostics, ssp_advance


__all__ = ["main"]

_F = "{:.17g}".format


def _fail_config(msg):
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _fail_admissibility(msg):
    print(f"admissibility failure: {msg}", file=sys.stderr)
    return 2


def _load_config(path, overrides):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"bad --set override (need key=value): {item}")
        key, raw = item.split("=", 1)
        parts = key.split(".")
        node = cfg
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        try:
            import ast
            node[parts[-1]] = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            node[parts[-1]] = raw
    return cfg


def _build_eos(spec):
    kind = spec.get("kind", "ideal")
    if kind == "ideal":
        return IdealEos(gamma=float(spec.get("gamma", 5.0 / 3.0)))
    if kind in ("taub-mathews", "tm"):
        return TaubMathewsEos()
    if kind == "table":
        path = spec.get("path")
        if not path or not os.path.exists(path):
            raise ConfigError(f"eos table file not found: {path}")
        eos = load_eos_table(path)
        # stay slightly inside the hull so finite-difference probes of the
        # derivative checks cannot step off the table
        report = validate_eos(eos,
                              (eos.p_grid[0] * 1.01, eos.p_grid[-1] * 0.99),
                              (eos.rho_grid[0] * 1.01,
                               eos.rho_grid[-1] * 0.99), n=500, seed=0)
        if report.violations:
            raise ConfigError(
                f"eos table fails {len(report.violations)} validity "
                "condition samples; refusing to run")
        return eos
    raise ConfigError(f"unknown eos kind: {kind}")


def _build_mesh(spec):
    kind = spec.get("kind", "cartesian")
    boundary = spec.get("boundary", "periodic")
    bounds = spec.get("bounds", ((0.0, 0.0), (1.0, 1.0)))
    bounds = (tuple(map(float, bounds[0])), tuple(map(float, bounds[1])))
    if kind == "cartesian":
        return build_cartesian(int(spec.get("nx", 16)),
                               int(spec.get("ny", 16)), bounds, boundary)
    if kind == "triangular":
        return build_triangular(int(spec.get("nx", 16)),
                                int(spec.get("ny", 16)), bounds, boundary)
    if kind == "file":
        path = spec.get("path")
        if not path or not os.path.exists(path):
            raise ConfigError(f"mesh file not found: {path}")
        return load_mesh(path, boundary=boundary,
                         bounds=bounds if boundary == "periodic" else None)
    raise ConfigError(f"unknown mesh kind: {kind}")


def _dump_solution(sol, mesh, eos, path):
    rec = recover_primitives_batch(eos, sol.avg)
    with open(path, "w") as fh:
        fh.write("cell_id,cx,cy,D,m1,m2,m3,B1,B2,B3,E,rho,v1,v2,v3,p\n")
        for k in range(mesh.n_cells):
            vals = ([mesh.centroid[k, 0], mesh.centroid[k, 1]]
                    + list(sol.avg[k])
                    + [rec["rho"][k]] + list(rec["v"][k]) + [rec["p"][k]])
            fh.write(",".join([str(k)] + [_F(v) for v in vals]) + "\n")


_DIAG_KEYS = ("n", "t", "dt", "min_rho", "min_p", "max_W", "max_abs_div",
              "max_abs_div_out", "mass_total", "energy_total")


def _cmd_run(args):
    cfg = _load_config(args.config, args.set)
    eos = _build_eos(cfg.get("eos", {}))
    mesh = _build_mesh(cfg.get("mesh", {}))
    scheme = cfg.get("scheme", {})
    order = int(scheme.get("order", 1))
    if order not in (1, 2):
        raise ConfigError("scheme order must be 1 or 2")
    rk = int(scheme.get("rk", order))
    divfree_b = bool(scheme.get("divfree_b", True))
    cflspec = cfg.get("cfl", {})
    sigma = float(cflspec.get("sigma", 0.9))
    if not (0.0 < sigma <= 1.0):
        raise ConfigError("cfl sigma must be in (0, 1]")
    cfl = CflPolicy(sigma=sigma, alpha=float(cflspec.get("alpha", 1.0)))
    eps = float(cfg.get("limiter", {}).get("epsilon", EpsilonSet().epsilon))
    run = cfg.get("run", {})
    t_end = float(run.get("t_end", 0.1))
    max_steps = int(run.get("max_steps", 10000))
    prefix = str(run.get("output_prefix", "pcp"))
    dump_every = int(run.get("dump_interval", 0))
    seed = int(run.get("seed", default_seed(0)))
    init = cfg.get("initial", {})
    preset = init.get("preset", "constant")
    rng = np.random.default_rng(seed)

    quad = cache = None
    if order > 1:
        quad = gauss_rules(int(scheme.get("Q", 2)), int(scheme.get("L", 3)))
        cache = DecompositionCache(mesh, quad)
    proj_quad = quad or gauss_rules(2, 3)
    avg = initial_averages(preset, init.get("params", {}), mesh, eos,
                           proj_quad, rng)
    sol = FieldSolution(avg=avg)
    diag_path = f"{prefix}_diag.csv"
    with open(diag_path, "w") as diag:
        diag.write(",".join(_DIAG_KEYS) + "\n")
        dt_last = 0.0
        while sol.t < t_end and sol.n < max_steps:
            row = diagnostics(sol, mesh, eos, quad)
            row["dt"] = dt_last
            diag.write(",".join(
                str(row["n"]) if k == "n" else _F(float(row[k]))
                for k in _DIAG_KEYS) + "\n")
            if dump_every and sol.n % dump_every == 0:
                _dump_solution(sol, mesh, eos, f"{prefix}_dump_{sol.n}.csv")
            t_before = sol.t
            sol = ssp_advance(sol, mesh, eos, cfl, order=order, rk=rk,
                              quad=quad, cache=cache, eps=eps,
                              divfree_b=divfree_b)
            dt_last = sol.t - t_before
        row = diagnostics(sol, mesh, eos, quad)
        row["dt"] = dt_last
        diag.write(",".join(
            str(row["n"]) if k == "n" else _F(float(row[k]))
            for k in _DIAG_KEYS) + "\n")
    _dump_solution(sol, mesh, eos, f"{prefix}_dump_{sol.n}.csv")
    print(f"completed {sol.n} steps to t = {_F(sol.t)}; "
          f"diagnostics in {diag_path}")
    return 0


def _cmd_lab(args):
    seed = args.seed if args.seed is not None else default_seed(0)
    if args.check == "counterexample":
        if args.sweep:
            rows = []
            ok = True
            for theta in np.arange(0.05, 0.5, 0.05):
                cfg = CounterexampleConfig(epsilon=args.eps, tau=args.tau,
                                           theta=round(float(theta), 10))
                rep = run_counterexample(cfg, IdealEos())
                rows.extend(rep.rows)
                ok &= rep.passed
            from .lab import Report
            report = Report(name="counterexample-sweep", passed=ok, rows=rows)
        else:
            cfg = CounterexampleConfig(epsilon=args.eps, tau=args.tau,
                                       theta=args.theta)
            report = run_counterexample(cfg, IdealEos())
    elif args.check == "splitting":
        report = check_generalized_splitting(
            n_poly2d=args.trials, n_tet3d=max(args.trials // 5, 1),
            seed=seed)
    elif args.check == "divergence":
        report = check_divergence_growth(steps=args.steps, ddf=not args.no_ddf,
                                         seed=seed)
    elif args.check == "odelta":
        report = check_odelta_bound(base=args.base, levels=args.levels,
                                    seed=seed)
    else:
        raise ConfigError(f"unknown lab check: {args.check}")
    out = args.output or f"{report.name}_report.csv"
    report.to_csv(out)
    print(f"{report.name}: {'pass' if report.passed else 'FAIL'} "
          f"({len(report.rows)} rows) -> {out}")
    return 0 if report.passed else 2


def _cmd_validate_eos(args):
    cfg = _load_config(args.config, args.set)
    spec = cfg.get("eos", {})
    val = cfg.get("validation", {})
    kind = spec.get("kind", "ideal")
    if kind == "table":
        path = spec.get("path")
        if not path or not os.path.exists(path):
            raise ConfigError(f"eos table file not found: {path}")
        eos = load_eos_table(path)
        default_p = (float(eos.p_grid[0]), float(eos.p_grid[-1]))
        default_rho = (float(eos.rho_grid[0]), float(eos.rho_grid[-1]))
    else:
        eos = _build_eos(spec)
        default_p = (1e-8, 1e3)
        default_rho = (1e-8, 1e3)
    p_range = tuple(map(float, val.get("p_range", default_p)))
    rho_range = tuple(map(float, val.get("rho_range", default_rho)))
    n = int(val.get("samples", 10000))
    report = validate_eos(eos, p_range, rho_range, n=n,
                          seed=int(val.get("seed", default_seed(0))))
    for v in report.violations:
        print(f"violation {v.condition} at p={_F(v.p)} rho={_F(v.rho)} "
              f"margin={_F(v.margin)}")
    if report.violations:
        print(f"{len(report.violations)} violations in {n} samples")
        return 2
    print(f"all {n} samples satisfy the validity conditions")
    return 0


def _cmd_mesh_info(args):
    if not os.path.exists(args.file):
        raise ConfigError(f"mesh file not found: {args.file}")
    mesh = load_mesh(args.file)
    mesh.validate()
    print(f"vertices: {len(mesh.vertices)}")
    print(f"cells: {mesh.n_cells}")
    print(f"faces (directed): {mesh.n_faces}")
    print(f"total measure: {_F(float(np.sum(mesh.cell_measure)))}")
    print(f"min cell measure: {_F(float(np.min(mesh.cell_measure)))}")
    print(f"max cell measure: {_F(float(np.max(mesh.cell_measure)))}")
    print(f"max circumscribed radius: {_F(mesh.delta_max)}")
    return 0


def _parser():
    ap = argparse.ArgumentParser(
        prog="pcp",
        description="Constraint-preserving finite-volume kit for "
                    "relativistic MHD")
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get("PCP_THREADS", 1)),
                    help="worker count (accepted; execution is serial)")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("config")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (dotted keys)")
    p_run.set_defaults(func=_cmd_run)

    p_lab = sub.add_parser("lab", help="run a verification check")
    p_lab.add_argument("check", choices=["counterexample", "splitting",
                                         "divergence", "odelta"])
    p_lab.add_argument("--theta", type=float, default=0.25)
    p_lab.add_argument("--eps", type=float, default=1e-6)
    p_lab.add_argument("--tau", type=float, default=None)
    p_lab.add_argument("--sweep", action="store_true",
                       help="sweep theta over (0, 1/2)")
    p_lab.add_argument("--trials", type=int, default=1000)
    p_lab.add_argument("--steps", type=int, default=200)
    p_lab.add_argument("--no-ddf", action="store_true")
    p_lab.add_argument("--base", type=int, default=8)
    p_lab.add_argument("--levels", type=int, default=3)
    p_lab.add_argument("--seed", type=int, default=None)
    p_lab.add_argument("--output", default=None)
    p_lab.set_defaults(func=_cmd_lab)

    p_val = sub.add_parser("validate-eos",
                           help="sample the equation-of-state conditions")
    p_val.add_argument("config")
    p_val.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_val.set_defaults(func=_cmd_validate_eos)

    p_mesh = sub.add_parser("mesh-info", help="print mesh statistics")
    p_mesh.add_argument("file")
    p_mesh.set_defaults(func=_cmd_mesh_info)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if getattr(args, "tau", None) is None and hasattr(args, "eps"):
        args.tau = args.eps
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail_config(exc)
    except (StepError, InadmissibleError, AverageInadmissible) as exc:
        return _fail_admissibility(exc)
    except PcpError as exc:
        return _fail_config(exc)


if __name__ == "__main__":
    sys.exit(main())
