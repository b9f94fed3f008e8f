"""Command-line interface.

Subcommands: ``gen`` (seeded instance files), ``solve`` (exact
shortest-path solver or exhaustive oracle), ``export`` (conic/quadratic
model files), ``verify`` (property sweeps), ``report`` (figures plus CSV
for a solved instance).

Exit codes: 0 success, 1 verification failure, 2 usage or bad parameters,
3 size guard, 4 numerical or positive definiteness failure.  The
``MPMIQP_THREADS`` environment variable caps verify-sweep parallelism;
aggregation is deterministic regardless of thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import spp
from .casestudies import CalciumInstance, HevInstance, calcium_models, gen_calcium, gen_hev, hev_models
from .factorizable import AssumptionViolationError
from .instances import (
    projected_from_instance,
    read_instance,
    write_instance,
)
from .jsonutil import canonical_json_bytes
from .models import (
    build_miqp,
    build_socp,
    certify_hull_feasibility,
    expand_indicators_to_big_m,
    model_stats,
    write_model,
)
from .oracle import SizeGuardError, enumerate_supports, verify_inverse, verify_path_polytope
from .projection import ProjectedMIQP
from .randgen import random_block_spec, random_projected, random_scalar_spec

RUN_CSV_SCHEMA = "mpmiqp-run/1"
VERIFY_CSV_SCHEMA = "mpmiqp-verify/1"
EXHAUSTIVE_GUARD = 16


def _thread_count() -> int:
    raw = os.environ.get("MPMIQP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_trials(fn, trials: int):
    workers = _thread_count()
    if workers == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _append_csv(path, header: list[str], rows: list[list]) -> None:
    path = Path(path)
    fresh = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(header)
        writer.writerows(rows)


def _solution_dict(objective, z, x, support, path_cost) -> dict:
    return {
        "objective": float(objective),
        "z": [int(round(zi)) for zi in z],
        "x": [float(xi) for xi in x],
        "support": [int(s) for s in support],
        "pathCost": float(path_cost),
    }


def cmd_generate(args) -> int:
    if args.kind == "calcium":
        inst = gen_calcium(n=args.n, mu=args.mu, sigma=args.sigma, alpha=args.alpha,
                           lam=getattr(args, "lambda"), seed=args.seed, beta0=args.beta0)
        default = f"calcium_n{args.n}_seed{args.seed}.json"
        summary = (f"calcium n={inst.n} alpha={inst.alpha} mu={inst.mu} "
                   f"sigma={inst.sigma} lambda={inst.lam} seed={inst.seed} "
                   f"spikes={int(np.count_nonzero(inst.true_spikes))}")
    else:
        inst = gen_hev(n=args.n, lam=getattr(args, "lambda"), seed=args.seed)
        default = f"hev_n{args.n}_seed{args.seed}.json"
        summary = f"hev n={inst.n} lambda={inst.lam} seed={inst.seed}"
    out = args.out or default
    nbytes = write_instance(inst, out)
    print(f"wrote {out} ({nbytes} bytes): {summary}")
    return 0


def cmd_solve(args) -> int:
    instance = read_instance(args.instance)
    m = projected_from_instance(instance)
    start = time.perf_counter()
    if args.mode == "spp":
        sol = spp.solve(m)
        record = _solution_dict(sol.objective, sol.z, sol.x, sol.support, sol.path_cost)
    else:
        result = enumerate_supports(m)
        z = np.zeros(m.n)
        for s in result.best_support:
            z[s - 1] = 1.0
        record = _solution_dict(result.best_objective, z, result.best_x,
                                result.best_support, result.best_objective - m.constant)
    wall_ms = (time.perf_counter() - start) * 1000.0
    print(f"mode={args.mode} objective={record['objective']:.12g} "
          f"support={len(record['support'])} wall_ms={wall_ms:.2f}")
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(canonical_json_bytes(record))
        print(f"wrote {args.out}")
    if args.log:
        seed = getattr(instance, "seed", "")
        _append_csv(args.log,
                    ["schema", "command", "instance", "mode", "seed", "wall_ms",
                     "objective", "support_size", "out"],
                    [[RUN_CSV_SCHEMA, "solve", str(args.instance), args.mode, seed,
                      f"{wall_ms:.3f}", f"{record['objective']:.12g}",
                      len(record["support"]), args.out or ""]])
    return 0


def cmd_export(args) -> int:
    instance = read_instance(args.instance)
    if isinstance(instance, CalciumInstance):
        socp, miqp = calcium_models(instance, args.variant)
        model = socp if args.formulation == "socp" else miqp
    elif isinstance(instance, HevInstance):
        if args.formulation == "socp":
            model = hev_models(instance, "socp")
        else:
            model = hev_models(instance, "miqp-p" if args.perspective else "miqp")
    else:
        m = instance if isinstance(instance, ProjectedMIQP) else projected_from_instance(instance)
        if args.formulation == "socp":
            model = build_socp(m, relax_binary=args.relax_z)
        else:
            model = build_miqp(m, x_bound=args.x_bound)
            if args.big_m:
                model = expand_indicators_to_big_m(model)
    out = args.out or (Path(str(args.instance)).stem + f".{args.formulation}.json")
    nbytes = write_model(model, out)
    stats = model_stats(model)
    print(f"kind={model.kind} continuous={stats['continuousCount']} "
          f"binary={stats['binaryCount']} cones={stats['coneCount']} "
          f"rows={stats['rowCount']}")
    print(f"wrote {out} ({nbytes} bytes)")
    return 0


def _spec_for(rng: np.random.Generator, n: int, d: int):
    return random_scalar_spec(rng, n) if d == 1 else random_block_spec(rng, n, d)


def _inverse_trial(seed: int, n: int, d: int):
    def run(trial: int):
        rng = np.random.default_rng([seed, trial, 1])
        spec = _spec_for(rng, n, d)
        worst = 0.0
        for mask in range(2 ** n):
            support = tuple(t + 1 for t in range(n) if mask >> t & 1)
            report = verify_inverse(spec, support, tol=1e-9)
            worst = max(worst, report.max_error)
        return worst, worst <= 1e-9, f"max inverse error {worst:.3e}"
    return run


def _polytope_trial(seed: int, n: int, d: int):
    def run(trial: int):
        rng = np.random.default_rng([seed, trial, 2])
        spec = _spec_for(rng, n, d)
        for mask in range(2 ** n):
            z = np.array([(mask >> t) & 1 for t in range(n)], dtype=float)
            try:
                verify_path_polytope(spec, z)
            except ArithmeticError as exc:
                return 1.0, False, f"z={z.astype(int).tolist()}: {exc}"
        return 0.0, True, f"all {2 ** n} supports consistent"
    return run


def _hull_trial(seed: int, n: int, d: int):
    def run(trial: int):
        rng = np.random.default_rng([seed, trial, 3])
        m = random_projected(rng, n, d)
        model = build_socp(m)
        sol = spp.solve(m)
        report = certify_hull_feasibility(model, sol, m)
        value = max(report.max_violation, report.objective_gap)
        return value, report.passed, (f"violation {report.max_violation:.3e} "
                                      f"gap {report.objective_gap:.3e}")
    return run


def cmd_verify(args) -> int:
    scopes = ["inverse", "polytope", "hull"] if args.scope == "all" else [args.scope]
    if any(s in ("inverse", "polytope") for s in scopes) and args.n > EXHAUSTIVE_GUARD:
        raise SizeGuardError(
            f"exhaustive scopes need n <= {EXHAUSTIVE_GUARD}, got {args.n}")
    factories = {"inverse": _inverse_trial, "polytope": _polytope_trial,
                 "hull": _hull_trial}
    rows = []
    first_failure = None
    for scope in scopes:
        run = factories[scope](args.seed, args.n, args.d)
        results = _map_trials(run, args.trials)
        for trial, (value, passed, detail) in enumerate(results):
            rows.append([VERIFY_CSV_SCHEMA, scope, trial, args.n, args.d,
                         f"{value:.6e}", int(passed)])
            if not passed and first_failure is None:
                first_failure = f"{scope} trial {trial}: {detail}"
        status = "pass" if all(r[6] for r in rows if r[1] == scope) else "FAIL"
        print(f"scope={scope} trials={args.trials} n={args.n} d={args.d}: {status}")
    if args.csv:
        _append_csv(args.csv,
                    ["schema", "scope", "trial", "n", "d", "value", "passed"], rows)
    if first_failure is not None:
        print(f"FAILED: {first_failure}", file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    from .report import write_report

    instance = read_instance(args.instance)
    if args.solution:
        with open(args.solution, "rb") as fh:
            record = json.loads(fh.read().decode("utf-8"))
    else:
        sol = spp.solve(projected_from_instance(instance))
        record = _solution_dict(sol.objective, sol.z, sol.x, sol.support, sol.path_cost)
    paths = write_report(instance, record, args.outdir)
    for path in paths:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpmiqp",
        description="Multi-period indicator MIQP toolkit: generate instances, "
                    "solve exactly via shortest path, export conic/quadratic "
                    "models, verify the closed-form machinery, render reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen_sub = gen.add_subparsers(dest="kind", required=True)
    cal = gen_sub.add_parser("calcium", help="fluorescence deconvolution instance")
    cal.add_argument("--n", type=int, required=True)
    cal.add_argument("--mu", type=float, default=0.05, help="spike rate")
    cal.add_argument("--sigma", type=float, default=0.1, help="noise level")
    cal.add_argument("--alpha", type=float, default=0.96, help="decay per step")
    cal.add_argument("--lambda", type=float, default=1.0, help="per-spike penalty")
    cal.add_argument("--beta0", type=float, default=1.0, help="initial concentration")
    cal.add_argument("--seed", type=int, required=True)
    cal.add_argument("--out", type=str, default=None)
    hev = gen_sub.add_parser("hev", help="path-following instance")
    hev.add_argument("--n", type=int, required=True)
    hev.add_argument("--lambda", type=float, default=2.0, help="engagement cost")
    hev.add_argument("--seed", type=int, required=True)
    hev.add_argument("--out", type=str, default=None)
    gen.set_defaults(func=cmd_generate)
    cal.set_defaults(func=cmd_generate)
    hev.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="solve an instance")
    solve.add_argument("--instance", type=str, required=True)
    solve.add_argument("--mode", choices=["spp", "oracle"], default="spp")
    solve.add_argument("--out", type=str, default=None, help="solution JSON path")
    solve.add_argument("--log", type=str, default=None, help="append a run-record CSV row")
    solve.set_defaults(func=cmd_solve)

    export = sub.add_parser("export", help="export a solver-ready model file")
    export.add_argument("--instance", type=str, required=True)
    export.add_argument("--formulation", choices=["socp", "miqp"], required=True)
    export.add_argument("--variant", choices=["relaxed", "original", "capacity"],
                        default="original", help="calcium side-constraint variant")
    export.add_argument("--perspective", action="store_true",
                        help="per-period perspective cones on the control cost (quadratic export)")
    export.add_argument("--relax-z", action="store_true", dest="relax_z",
                        help="continuous indicators in the conic export")
    export.add_argument("--x-bound", type=float, default=None, dest="x_bound",
                        help="symmetric bound on every x component")
    export.add_argument("--big-m", action="store_true", dest="big_m",
                        help="expand indicators to big-M rows (needs bounds)")
    export.add_argument("--out", type=str, default=None)
    export.set_defaults(func=cmd_export)

    verify = sub.add_parser("verify", help="run property sweeps")
    verify.add_argument("--scope", choices=["inverse", "polytope", "hull", "all"],
                        required=True)
    verify.add_argument("--n", type=int, default=8)
    verify.add_argument("--d", type=int, default=1)
    verify.add_argument("--trials", type=int, default=50)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--csv", type=str, default=None)
    verify.set_defaults(func=cmd_verify)

    report = sub.add_parser("report", help="render figures and CSV for an instance")
    report.add_argument("--instance", type=str, required=True)
    report.add_argument("--solution", type=str, default=None)
    report.add_argument("--outdir", type=str, required=True)
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (AssumptionViolationError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
