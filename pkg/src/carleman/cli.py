"""Batch command-line front end.

One command per process: certify, converge, burgers, km, bounds,
simulate.  Each run reads a system definition (JSON), computes, and
writes delimited tables plus JSON reports into --out; figures are
rendered alongside unless --no-plots.  Exit codes: 0 on success, 1 when
a certificate or probe fails, 2 on malformed input (argparse uses 2 for
bad flags as well).  Outputs carry no timestamps and all maps are
written with sorted keys, so a fixed seed reproduces identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .assemble import assemble
from .bounds import a_bound, perturbed_resolvent_bound
from .burgers import (
    build_discretization,
    certify_spectral,
    compute_KM,
    initial_condition,
    level_error_study,
)
from .certify import KernelInclusionError, certify, nonlinear_relative_bound
from .convergence import level_sweep, run_to_csv
from .io import atomic_write_text, load_system, read_json, sha256_file, write_json
from .oracle import BlowupError
from .semigroup import evolve, integrated_criterion
from .tensor import embed

__all__ = ["main"]


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def _outpath(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_table(args, name: str, columns, rows) -> str:
    """Delimited table as CSV or JSON depending on --format."""
    if args.format == "json":
        obj = {"columns": list(columns), "rows": [[_fmt(x) if x is not None else None for x in row] for row in rows]}
        return write_json(_outpath(args, name + ".json"), obj)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join("" if x is None else _fmt(x) for x in row))
    return atomic_write_text(_outpath(args, name + ".csv"), "\n".join(lines) + "\n")


def _run_record(run) -> dict:
    return {
        "columns": ["sweep_var", "e1", "eta2", "eta3", "bound_eta1", "R", "fitted_ratio"],
        "R": run.R,
        "fitted_ratio": run.fitted_ratio,
        "horizon": run.horizon,
        "scale": run.scale,
        "flags": list(run.flags),
    }


def cmd_certify(args) -> int:
    system = load_system(args.system)
    cs = assemble(system, args.level, sparse=False)
    report = certify(cs, tol=args.tol)
    records = report.as_records()
    ok = report.passed
    try:
        margin = nonlinear_relative_bound(system.W(1), system.W(2), samples=args.samples, rng=args.seed)
        margin_ok = margin <= report.tolerance
        records.append({"certificate": "relative_bound", "lambda_max": margin,
                        "tol": report.tolerance, "verdict": "pass" if margin_ok else "fail"})
        ok = ok and margin_ok
    except (KernelInclusionError, ValueError) as exc:
        records.append({"certificate": "relative_bound", "verdict": "skipped", "reason": str(exc)})

    write_json(_outpath(args, "certify_report.json"), {
        "system": args.system,
        "system_sha256": sha256_file(args.system),
        "level": args.level,
        "tolerance": report.tolerance,
        "seed": args.seed,
        "implication_ok": report.implication_ok,
        "certificates": records,
        "verdict": "pass" if ok else "fail",
    })
    if not args.no_plots:
        from .plots import certificate_plot

        certificate_plot(report, _outpath(args, "certify_certificates.png"))
    return 0 if ok else 1


def cmd_converge(args) -> int:
    system = load_system(args.system)
    run = level_sweep(system, args.level_max, args.time, h=args.h)
    rows = [
        [run.sweep[i],
         run.e1[i],
         run.eta2[i] if np.isfinite(run.eta2[i]) else None,
         run.eta3[i] if np.isfinite(run.eta3[i]) else None,
         run.bound_eta1[i] if np.isfinite(run.bound_eta1[i]) else None,
         run.R,
         run.fitted_ratio]
        for i in range(run.sweep.size)
    ]
    _write_table(args, "converge_sweep", ["sweep_var", "e1", "eta2", "eta3", "bound_eta1", "R", "fitted_ratio"], rows)
    manifest = {
        "command": "converge",
        "system": args.system,
        "system_sha256": sha256_file(args.system),
        "level_max": args.level_max,
        "time": args.time,
        "h": args.h,
        "seed": args.seed,
        "tol": args.tol,
    }
    manifest.update(_run_record(run))
    write_json(_outpath(args, "converge_manifest.json"), manifest)
    if not args.no_plots:
        from .plots import convergence_plot

        convergence_plot(run, _outpath(args, "converge_sweep.png"))
    return 0


def cmd_burgers(args) -> int:
    value, tail = compute_KM(args.order, args.cutoff_p)
    value_half, tail_half = compute_KM(args.order, max(2, args.cutoff_p // 2))
    stability = abs(value - value_half) / value if value else 0.0
    threshold = math.sqrt(value + tail)
    nu = 1.1 * threshold if args.nu == "auto" else float(args.nu)
    write_json(_outpath(args, "burgers_km.json"), {
        "M": args.order,
        "cutoff_P": args.cutoff_p,
        "cutoff_m": 2 * args.cutoff_p,
        "value": value,
        "tail": tail,
        "cutoff_stability": stability,
        "threshold": threshold,
        "nu": nu,
    })

    disc = build_discretization(args.modes, args.order, nu)
    phi0 = initial_condition(disc, {1: 1.0}, norm=args.norm)
    report = certify_spectral(disc, samples=args.samples, rng=args.seed, tol=args.tol)
    write_json(_outpath(args, "burgers_certificates.json"), {
        "n": args.modes,
        "M": args.order,
        "nu": nu,
        "tolerance": report.tolerance,
        "seed": args.seed,
        "certificates": report.as_records(),
        "verdict": "pass" if report.passed else "fail",
    })
    if not args.no_plots:
        from .plots import certificate_plot

        certificate_plot(report, _outpath(args, "burgers_certificates.png"))
    if not report.passed:
        return 1

    run = level_error_study(disc, phi0, n_max=args.level_max, t=args.time, h=args.h)
    atomic_write_text(_outpath(args, "burgers_sweep.csv"), run_to_csv(run))
    manifest = {"command": "burgers", "n": args.modes, "M": args.order, "nu": nu,
                "norm": args.norm, "time": args.time, "h": args.h, "seed": args.seed}
    manifest.update(_run_record(run))
    write_json(_outpath(args, "burgers_manifest.json"), manifest)
    if not args.no_plots:
        from .plots import convergence_plot

        convergence_plot(run, _outpath(args, "burgers_sweep.png"))
    return 0


def cmd_km(args) -> int:
    cutoffs = sorted({max(2, args.cutoff_p // 4), max(2, args.cutoff_p // 2), args.cutoff_p})
    values, tails = [], []
    for p in cutoffs:
        v, t = compute_KM(args.order, p, args.cutoff_m)
        values.append(v)
        tails.append(t)
    rows = [[float(p), v, t] for p, v, t in zip(cutoffs, values, tails)]
    _write_table(args, "km_partials", ["cutoff_P", "value", "tail"], rows)
    write_json(_outpath(args, "km.json"), {
        "M": args.order,
        "cutoff_P": args.cutoff_p,
        "cutoff_m": args.cutoff_m if args.cutoff_m is not None else 2 * args.cutoff_p,
        "value": values[-1],
        "tail": tails[-1],
        "threshold": math.sqrt(values[-1] + tails[-1]),
    })
    if not args.no_plots:
        from .plots import km_partial_plot

        km_partial_plot(cutoffs, values, tails, _outpath(args, "km_partials.png"))
    return 0


def cmd_bounds(args) -> int:
    system = load_system(args.system)
    lambdas = [float(x) for x in args.lambdas.split(",") if x.strip()]
    rel = a_bound(system, args.level, samples=args.samples, rng=args.seed)
    res = perturbed_resolvent_bound(system, args.level, lambdas, samples=args.samples, rng=args.seed)
    integrated = None
    if res.applicable:
        cs = assemble(system, args.level, sparse=False)
        integrated = {
            "M": res.M,
            "b": 1.0,
            "ok": integrated_criterion(cs, lambdas, res.M, 1.0),
        }
    write_json(_outpath(args, "bounds_report.json"), {
        "system": args.system,
        "system_sha256": sha256_file(args.system),
        "level": args.level,
        "seed": args.seed,
        "relative_bound": rel.as_record(),
        "resolvent": res.as_record(),
        "integrated": integrated,
    })
    rows = [[p.lam, p.norm_R, p.bound] for p in res.probes]
    _write_table(args, "bounds_probes", ["lambda", "norm_R", "bound"], rows)
    if not args.no_plots and res.probes:
        from .plots import resolvent_plot

        resolvent_plot(res.probes, _outpath(args, "bounds_resolvent.png"))
    return 0 if (not res.applicable) or res.passed else 1


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    cs = assemble(system, args.level)
    times = np.linspace(0.0, args.time, args.steps + 1)
    result = evolve(cs, embed(system.phi0, args.level), times, method=args.method, h=args.h)
    traj = np.array([state.levels[0] for state in result.states])
    columns = ["t"]
    for k in range(system.base_dim):
        columns += [f"u{k}_re", f"u{k}_im"]
    rows = []
    for i, t in enumerate(times):
        row = [t]
        for k in range(system.base_dim):
            row += [traj[i, k].real, traj[i, k].imag]
        rows.append(row)
    _write_table(args, "simulate_trajectory", columns, rows)
    write_json(_outpath(args, "simulate_manifest.json"), {
        "command": "simulate",
        "system": args.system,
        "system_sha256": sha256_file(args.system),
        "level": args.level,
        "time": args.time,
        "steps": args.steps,
        "method": result.method,
        "seed": args.seed,
        "backend": result.meta.get("backend"),
    })
    if not args.no_plots:
        from .plots import trajectory_plot

        trajectory_plot(times, traj, _outpath(args, "simulate_trajectory.png"),
                        labels=[f"u{k}" for k in range(system.base_dim)])
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    p.add_argument("--tol", type=float, default=None, help="certificate tolerance override")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="carleman",
                                     description="Carleman linearization toolkit: certificates, sweeps, case studies")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="dissipativity certificates for a quadratic system")
    p.add_argument("--system", required=True)
    p.add_argument("--level", type=int, default=3, help="Carleman truncation level N")
    p.add_argument("--samples", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("converge", help="error against the Carleman level")
    p.add_argument("--system", required=True)
    p.add_argument("--level-max", type=int, required=True, help="largest level N")
    p.add_argument("--time", type=float, default=1.0, help="horizon T")
    p.add_argument("--h", type=float, default=1e-3, help="oracle step size")
    _add_common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("burgers", help="hyperviscous Burgers case study end to end")
    p.add_argument("--modes", type=int, default=4, help="mode cutoff n")
    p.add_argument("--order", type=int, default=3, help="hyperviscosity order M (odd, > 2)")
    p.add_argument("--nu", default="auto", help="viscosity, or 'auto' for 1.1x threshold")
    p.add_argument("--norm", type=float, default=0.5, help="initial-data norm")
    p.add_argument("--time", type=float, default=0.5)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--level-max", type=int, default=3)
    p.add_argument("--cutoff-p", type=int, default=200)
    p.add_argument("--samples", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(func=cmd_burgers)

    p = sub.add_parser("km", help="double-sum constant K_M with tail estimate")
    p.add_argument("--order", type=int, required=True, help="hyperviscosity order M (> 2)")
    p.add_argument("--cutoff-p", type=int, default=200)
    p.add_argument("--cutoff-m", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_km)

    p = sub.add_parser("bounds", help="relative A-bound and resolvent probes")
    p.add_argument("--system", required=True)
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--lambdas", default="0.5,1,2,10", help="comma-separated probe grid")
    p.add_argument("--samples", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="evolve the truncated linear system")
    p.add_argument("--system", required=True)
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--method", choices=("expm", "rk4"), default="expm")
    p.add_argument("--h", type=float, default=1e-3)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except BlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
