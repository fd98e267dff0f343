"""Command-line front end.

Subcommands: solve, verify, simulate, compare, export-characteristics.
Exit codes: 0 success, 1 configuration error, 2 inadmissible model,
3 no minimizer exists (infimum escapes to a boundary).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .characteristics import build_characteristics
from .config import RunConfig, load_config, policy_from, sim_config_from
from .costs import validate_costs
from .errors import AdmissibilityError, ConfigError, SSInvError
from .models import (
    delayed_policy_cost,
    jit_cost,
    reflected_dbm_optimum,
)
from .qvi import build_g, verify_qvi
from .sde import build_tables, classify_boundaries
from .simulate import DelayedTrigger, JustInTime, OrderUpTo, simulate
from .solver import SolverConfig, evaluate_policy, minimize_f

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_NO_MINIMIZER = 3

_FMT = "%.17e"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return str(x)
    return _FMT % x


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")


def _prepare(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _characteristics(cfg: RunConfig, section: dict):
    domain = section.get("domain")
    mode = section.get("mode", "auto")
    if domain is not None:
        domain = (float(domain[0]), float(domain[1]))
    return build_characteristics(cfg.model, cfg.costs, domain=domain, mode=mode)


def cmd_solve(args) -> int:
    cfg, out = _prepare(args)
    seed = args.seed if args.seed is not None else int(cfg.simulate.get("seed", 0))
    print(f"# ssinv {__version__} solve  (seed={seed})")
    boundary = classify_boundaries(cfg.model)
    if not boundary.admissible:
        print(
            f"model inadmissible: left attracting={boundary.left_attracting}, "
            f"right attracting={boundary.right_attracting}",
            file=sys.stderr,
        )
        return EXIT_INADMISSIBLE
    validation = validate_costs(cfg.model, cfg.costs, boundary=boundary)
    if not validation.all_pass:
        msg = ", ".join(validation.failures())
        if cfg.solve.get("skip_cost_validation"):
            print(f"warning: cost conditions not satisfied ({msg}); overridden by config")
        else:
            print(f"warning: cost conditions not satisfied ({msg}); proceeding")

    chars = _characteristics(cfg, cfg.solve)
    sconf = SolverConfig(
        multistarts=int(cfg.solve.get("multistarts", 16)),
        search_span=cfg.solve.get("search_span"),
    )
    report = minimize_f(chars, cfg.costs, sconf)

    payload = {
        "seed": seed,
        "verdict": report.verdict,
        "y_star": report.y_star,
        "z_star": report.z_star,
        "f_star": report.f_star,
        "boundary_case": report.boundary_case,
        "foc_residual": list(report.foc_residual),
        "soc_value": report.soc_value,
        "iterations": report.iterations,
        "evaluations": report.evaluations,
        "escape_direction": report.escape_direction,
        "infimum_trend": report.infimum_trend,
        "warnings": report.warnings,
        "boundary": {
            "left_class": boundary.left_class,
            "right_class": boundary.right_class,
            "left_attainable": boundary.left_attainable,
            "admissible": boundary.admissible,
        },
        "cost_validation": {
            "inf_compact": validation.inf_compact,
            "boundary_limits": validation.boundary_limits,
            "c0_m_integrable": validation.c0_m_integrable,
            "double_integral_diverges": validation.double_integral_diverges,
        },
    }
    _write_json(out / "solve.json", payload)
    _write_f_surface(out / "f_surface.csv", chars, cfg, report)

    if report.verdict == "no_minimizer":
        print(
            f"no minimizer: F keeps improving toward the {report.escape_direction}; "
            f"infimum trend {report.infimum_trend:.6g}"
        )
        return EXIT_NO_MINIMIZER
    if report.verdict != "minimizer":
        print("solve failed", file=sys.stderr)
        return EXIT_CONFIG
    print(
        f"y*={report.y_star:.12g}  z*={report.z_star:.12g}  F*={report.f_star:.12g}  "
        f"boundary_case={report.boundary_case}"
    )
    print(f"wrote {out / 'solve.json'} and {out / 'f_surface.csv'}")
    return EXIT_OK


def _write_f_surface(path: Path, chars, cfg: RunConfig, report) -> None:
    from .solver import policy_cost

    if report.found:
        y0, z0 = report.y_star, report.z_star
    else:
        y0, z0 = chars.anchor - 1.0, chars.anchor + 1.0
    w = max(z0 - y0, 1e-3)
    ys = np.linspace(y0 - 2 * w, y0 + 0.8 * w, 60)
    zs = np.linspace(z0 - 0.8 * w, z0 + 2 * w, 60)
    with open(path, "w") as fh:
        fh.write("y,z,F\n")
        for y in ys:
            for z in zs:
                if y < z:
                    try:
                        f = policy_cost(chars, cfg.costs, float(y), float(z))
                    except SSInvError:
                        continue
                    fh.write(f"{_fmt(y)},{_fmt(z)},{_fmt(f)}\n")


def cmd_verify(args) -> int:
    cfg, out = _prepare(args)
    print(f"# ssinv {__version__} verify")
    boundary = classify_boundaries(cfg.model)
    if not boundary.admissible:
        print("model inadmissible", file=sys.stderr)
        return EXIT_INADMISSIBLE
    chars = _characteristics(cfg, cfg.verify)
    report = minimize_f(chars, cfg.costs)
    if not report.found:
        print(f"cannot verify: solve verdict {report.verdict}", file=sys.stderr)
        return EXIT_NO_MINIMIZER
    gsol = build_g(chars, cfg.costs, report)
    qvi = verify_qvi(
        gsol,
        n_grid=int(cfg.verify.get("grid_points", 240)),
        tol_scale=float(cfg.verify.get("tol_scale", 1e-6)),
    )
    payload = {
        "y_star": report.y_star,
        "z_star": report.z_star,
        "f_star": report.f_star,
        "passed": qvi.passed,
        "tolerance": qvi.tol,
        "worst_slack_generator_inequality": qvi.worst_slack_ineq_a,
        "worst_slack_jump_inequality": qvi.worst_slack_ineq_b,
        "equality_residual_generator": qvi.eq_residual_generator,
        "equality_residual_jump": qvi.eq_residual_jump,
        "condition_36": qvi.condition_36,
        "gluing_gap": qvi.gluing_gap,
    }
    _write_json(out / "verify.json", payload)
    with open(out / "witnesses.csv", "w") as fh:
        fh.write("check,location,value\n")
        fh.write(f"generator_inequality,{qvi.witnesses['ineq_a_at']},{_fmt(qvi.worst_slack_ineq_a)}\n")
        fh.write(f"jump_inequality,\"{qvi.witnesses['ineq_b_at']}\",{_fmt(qvi.worst_slack_ineq_b)}\n")
        fh.write(f"generator_equality,{qvi.witnesses['eq_generator_at']},{_fmt(qvi.eq_residual_generator)}\n")
        fh.write(f"jump_equality,{qvi.witnesses['eq_jump_at']},{_fmt(qvi.eq_residual_jump)}\n")
    print(f"QVI verdict: {'pass' if qvi.passed else 'FAIL'}  (condition 3.6: {qvi.condition_36})")
    print(f"wrote {out / 'verify.json'} and {out / 'witnesses.csv'}")
    return EXIT_OK if qvi.passed else EXIT_CONFIG


def cmd_simulate(args) -> int:
    cfg, out = _prepare(args)
    threads = args.threads
    sim_cfg = sim_config_from(cfg.simulate, seed_override=args.seed, threads=threads)
    print(f"# ssinv {__version__} simulate  (seed={sim_cfg.seed}, threads={threads})")

    solve_result = None
    pol_sec = cfg.simulate.get("policy") or {"type": "optimal"}
    if pol_sec.get("type") == "optimal":
        chars = _characteristics(cfg, cfg.solve)
        solve_result = minimize_f(chars, cfg.costs)
        if not solve_result.found:
            print("cannot simulate the optimal policy: no minimizer", file=sys.stderr)
            return EXIT_NO_MINIMIZER
    policy = policy_from(cfg.simulate, solve_result)

    res = simulate(cfg.model, cfg.costs, policy, sim_cfg)
    payload = {
        "seed": sim_cfg.seed,
        "dt": sim_cfg.dt,
        "horizon": sim_cfg.horizon,
        "paths": sim_cfg.paths,
        "policy": str(policy),
        "avg_cost": res.avg_cost,
        "stderr": res.stderr,
        "holding_rate": res.holding_rate,
        "ordering_rate": res.ordering_rate,
        "reflection_rate": res.reflection_rate,
        "local_time_rate": res.local_time_rate,
        "order_frequency": res.order_frequency,
        "order_frequency_stderr": res.order_frequency_stderr,
        "renewal_avg_cost": res.renewal_avg_cost,
        "cycle_mean_length": res.cycle_mean_length,
        "cycle_mean_cost": res.cycle_mean_cost,
        "n_cycles": res.n_cycles,
        "aborted_paths": res.aborted,
    }
    _write_json(out / "simulate.json", payload)
    with open(out / "occupancy.csv", "w") as fh:
        fh.write("bin_left,bin_right,count\n")
        for lo, hi, c in zip(res.hist_edges[:-1], res.hist_edges[1:], res.hist_counts):
            fh.write(f"{_fmt(lo)},{_fmt(hi)},{int(c)}\n")
    _write_path_sample(out / "path_sample.csv", cfg, policy, sim_cfg)
    print(f"avg cost {res.avg_cost:.6g} +- {res.stderr:.2g}   orders/time {res.order_frequency:.6g}")
    print(f"wrote {out / 'simulate.json'}, {out / 'occupancy.csv'}, {out / 'path_sample.csv'}")
    return EXIT_OK


def _write_path_sample(path: Path, cfg: RunConfig, policy, sim_cfg, max_points: int = 4000) -> None:
    """One-path trajectory sample at a reduced recording stride."""
    from . import kernels

    n_steps = int(round(sim_cfg.horizon / sim_cfg.dt))
    stride = max(1, n_steps // max_points)
    g = kernels.path_rng(sim_cfg.seed, 0)
    model, costs = cfg.model, cfg.costs
    logscale = model.kind == "gbm"
    mu = model.params.get("mu", 0.0)
    sigma = model.params.get("sigma", 1.0)
    sqdt = math.sqrt(sim_cfg.dt)
    if isinstance(policy, OrderUpTo):
        x = policy.z
    elif isinstance(policy, DelayedTrigger):
        x = policy.target
    else:
        x = sim_cfg.x0 if sim_cfg.x0 is not None else model.anchor
    armed = False
    rows = [(0.0, x)]
    for k in range(n_steps):
        z = float(g.standard_normal())
        if logscale:
            x_new = x * math.exp((-mu - 0.5 * sigma * sigma) * sim_cfg.dt + sigma * sqdt * z)
        elif model.kind in ("dbm", "reflected_dbm"):
            x_new = x + (-mu) * sim_cfg.dt + sigma * sqdt * z
        else:
            x_new = x + float(model.drift(x)) * sim_cfg.dt + float(model.diffusion(x)) * sqdt * z
        if isinstance(policy, DelayedTrigger) and x_new <= policy.trigger:
            armed = True
        if isinstance(policy, OrderUpTo) and x_new <= policy.y:
            x_new = policy.z
        elif model.reflected_left and x_new < model.left:
            x_new = model.left
        if isinstance(policy, DelayedTrigger) and armed and x_new >= policy.reorder:
            x_new = policy.target
            armed = False
        x = x_new
        if (k + 1) % stride == 0:
            rows.append(((k + 1) * sim_cfg.dt, x))
    with open(path, "w") as fh:
        fh.write("t,x\n")
        for t, v in rows:
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")


def cmd_compare(args) -> int:
    cfg, out = _prepare(args)
    if cfg.dbm_params is None or not cfg.dbm_params.reflected:
        print("compare requires the reflected_dbm builtin model", file=sys.stderr)
        return EXIT_CONFIG
    p = cfg.dbm_params
    threads = args.threads
    sim_requested = bool(cfg.compare.get("simulate", True))
    sim_cfg = sim_config_from(cfg.compare, seed_override=args.seed, threads=threads)
    print(f"# ssinv {__version__} compare  (seed={sim_cfg.seed})")

    y_star, z_star, f_star = reflected_dbm_optimum(p)
    rows = [("optimal_order_up_to", y_star, z_star, f_star)]
    ys = cfg.compare.get("ys") or [0.25 * z_star, 0.5 * z_star, 0.75 * z_star]
    zs = cfg.compare.get("zs") or [z_star, 1.5 * z_star]
    for y in ys:
        for z in zs:
            if 0 <= y < z:
                rows.append(("delayed_trigger", float(y), float(z), delayed_policy_cost(p, float(y), float(z))))
    rows.append(("just_in_time", math.nan, math.nan, jit_cost(p)))

    results = []
    for name, y, z, analytic in rows:
        sim_cost = sim_err = math.nan
        if sim_requested:
            if name == "optimal_order_up_to":
                policy = OrderUpTo(y, z)
            elif name == "delayed_trigger":
                policy = DelayedTrigger(0.0, y, z)
            else:
                policy = JustInTime()
            res = simulate(cfg.model, cfg.costs, policy, sim_cfg)
            sim_cost, sim_err = res.avg_cost, res.stderr
        results.append((name, y, z, analytic, sim_cost, sim_err))

    best = min(results, key=lambda r: r[3])
    with open(out / "compare.csv", "w") as fh:
        fh.write("policy,y,z,analytic_cost,simulated_cost,simulated_stderr,cheapest\n")
        for name, y, z, analytic, sc, se in results:
            fh.write(
                f"{name},{_fmt(y)},{_fmt(z)},{_fmt(analytic)},{_fmt(sc)},{_fmt(se)},"
                f"{1 if (name, y, z) == (best[0], best[1], best[2]) else 0}\n"
            )
    print(f"cheapest policy: {best[0]} (analytic cost {best[3]:.6g})")
    print(f"wrote {out / 'compare.csv'}")
    return EXIT_OK


def cmd_export_characteristics(args) -> int:
    cfg, out = _prepare(args)
    chars = _characteristics(cfg, cfg.export)
    path = out / "characteristics.csv"
    chars.export_csv(path, n=int(cfg.export.get("points", 2001)))
    print(f"wrote {path} (mode: {chars.mode})")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssinv",
        description="Optimal (s,S) impulse-control policies for diffusion inventory models",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("solve", cmd_solve),
        ("verify", cmd_verify),
        ("simulate", cmd_simulate),
        ("compare", cmd_compare),
        ("export-characteristics", cmd_export_characteristics),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to the YAML/JSON run configuration")
        sp.add_argument("--out", default=None, help="output directory (default from config)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("SSINV_THREADS", "1")),
            help="worker threads (default $SSINV_THREADS or 1)",
        )
        sp.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        print(f"inadmissible model: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except SSInvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
