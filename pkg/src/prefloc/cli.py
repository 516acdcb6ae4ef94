"""Command-line interface.

Exit codes: 0 success, 2 validation error (bad files, bad flags, violated
invariants), 3 numerical fault (undefined metric, degenerate weights).
"""

from __future__ import annotations

import argparse
import json
import sys

from .algorithms import ALGO_NEMO, ALGORITHMS, RunConfig, run
from .dm import best_subset, parse_family
from .errors import NumericalFault, PreflocError, ValidationError
from .harness import ExperimentPlan, emit_mwu_matrices, emit_report, run_experiment
from .instance import (
    GeneratorConfig,
    Instance,
    ObjectiveBounds,
    compute_bounds,
    generate_instance,
    load_instance,
    save_instance,
)
from .numerics import SimplexSearchConfig


def _cmd_gen_instance(args) -> int:
    spec = GeneratorConfig(
        scale=args.scale,
        pop_low=args.pop_low,
        pop_high=args.pop_high,
        s1=args.s1,
        s2=args.s2,
    )
    inst = generate_instance(args.q, args.m, args.seed, spec)
    save_instance(inst, args.out)
    print(f"wrote instance q={inst.q} m={inst.m} s1={inst.s1:.4g} s2={inst.s2:.4g} -> {args.out}")
    return 0


def _cmd_bounds(args) -> int:
    inst = load_instance(args.instance)
    bounds = compute_bounds(inst, args.p, args.method)
    doc = {
        str(k + 1): {"min": bounds.fmin[k], "max": bounds.fmax[k]} for k in range(5)
    }
    print(json.dumps({"method": bounds.method, "bounds": doc}, indent=2))
    if args.out:
        enriched = Instance(inst.demand, inst.sites, inst.s1, inst.s2,
                            ObjectiveBounds(bounds.fmin, bounds.fmax, "provided"))
        save_instance(enriched, args.out)
        print(f"wrote instance with bounds -> {args.out}")
    return 0


class _StdinDm:
    """Interactive play from a terminal: queries print, answers read."""

    def compare(self, left, right, context=None):
        from .dm import DmAnswer

        print(f"\n[generation {context.generation}] which layout do you prefer?")
        print(f"  (1) sites {list(context.left_solution.sites)}  objectives {left.as_tuple()}")
        print(f"  (2) sites {list(context.right_solution.sites)}  objectives {right.as_tuple()}")
        while True:
            token = input("answer 1 / 2 / 0 (indifferent): ").strip()
            if token in ("1", "2", "0"):
                verdict = {"1": "left", "2": "right", "0": "indifferent"}[token]
                return DmAnswer(verdict)
            print("please type 1, 2 or 0")


def _cmd_run(args) -> int:
    inst = load_instance(args.instance)
    bounds = compute_bounds(inst, args.p, args.bounds)
    if args.interactive:
        user = _StdinDm()
        pb = None
    else:
        user = parse_family(args.dm, bounds)
        pb = best_subset(user, inst, args.p)
    cfg = RunConfig(
        algorithm=args.algo,
        p=args.p,
        seed=args.seed,
        dm=user,
        bounds=bounds,
        pb=pb,
        interaction_period=args.period,
        max_generations=args.max_generations,
        pop_size=args.pop_size,
        search=SimplexSearchConfig(),
    )
    record = run(inst, cfg)
    line = record.to_json_line()
    if args.out:
        with open(args.out, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
    print(line)
    return 0


def _cmd_experiment(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    def progress(done, total):
        if done % 25 == 0 or done == total:
            print(f"\r{done}/{total} runs", end="", flush=True)
    result = run_experiment(plan, jobs=args.jobs, progress=progress)
    print()
    files = emit_report(result, args.out)
    for f in files:
        print(f"wrote {f}")
    return 0


def _cmd_stats(args) -> int:
    from .harness import AlgorithmSpec, CellKey, CellResult, ExperimentResult, load_records, load_summary, summarize_cell

    summary = load_summary(args.indir)
    records = load_records(args.indir)
    plan = ExperimentPlan(
        generator={"q": 1, "m": 2, "seed": 0},
        algorithms=[AlgorithmSpec("ea_uvf")],
        runs=summary["runs"],
        max_generations=summary["max_generations"],
    )
    cells = []
    for entry in summary["cells"]:
        label = f"p{entry['p']}_{entry['dm']}_{entry['algorithm']}"
        if label not in records:
            raise ValidationError(f"records for {label} missing under {args.indir}")
        if entry["algorithm"].startswith("NIICh_"):
            spec = AlgorithmSpec(ALGO_NEMO, int(entry["algorithm"].split("_")[1]))
        else:
            name = {v: k for k, v in {"ea_uvf": "EA-UVF", "ea_uvf1": "EA-UVF1", "ea_uvf2": "EA-UVF2"}.items()}[entry["algorithm"]]
            spec = AlgorithmSpec(name)
        recs = records[label]
        cells.append(CellResult(CellKey(entry["p"], entry["dm"], spec), recs, summarize_cell(recs)))
    result = ExperimentResult(plan, cells)
    if args.mwu:
        for f in emit_mwu_matrices(result, args.indir):
            print(f"wrote {f}")
    for cell in cells:
        print(cell.key.label, json.dumps(cell.summary.as_row()))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(log_dir=args.log_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.addr, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefloc")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-instance", help="generate a synthetic instance file")
    g.add_argument("--q", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--scale", type=float, default=100.0)
    g.add_argument("--pop-low", type=int, default=1)
    g.add_argument("--pop-high", type=int, default=100)
    g.add_argument("--s1", type=float, default=None)
    g.add_argument("--s2", type=float, default=None)
    g.set_defaults(func=_cmd_gen_instance)

    b = sub.add_parser("bounds", help="compute per-objective bounds over p-subsets")
    b.add_argument("--instance", required=True)
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--method", choices=["exhaustive", "evolutionary", "provided"],
                   default="exhaustive")
    b.add_argument("--out", default=None, help="write a copy of the instance with bounds")
    b.set_defaults(func=_cmd_bounds)

    r = sub.add_parser("run", help="execute a single run")
    r.add_argument("--instance", required=True)
    r.add_argument("--algo", choices=list(ALGORITHMS), required=True)
    r.add_argument("--period", type=int, default=10)
    r.add_argument("--p", type=int, required=True)
    r.add_argument("--dm", default="U_N", help="user family label, e.g. U_N or U_D_1235")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--interactive", action="store_true",
                   help="answer the queries yourself on stdin")
    r.add_argument("--bounds", choices=["exhaustive", "evolutionary", "provided"],
                   default="exhaustive")
    r.add_argument("--max-generations", type=int, default=1000)
    r.add_argument("--pop-size", type=int, default=30)
    r.add_argument("--out", default=None, help="append the run record to this file")
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("experiment", help="run a batch experiment plan")
    e.add_argument("--plan", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--jobs", type=int, default=1)
    e.set_defaults(func=_cmd_experiment)

    s = sub.add_parser("stats", help="recompute summaries and tests from records")
    s.add_argument("--in", dest="indir", required=True)
    s.add_argument("--mwu", action="store_true")
    s.set_defaults(func=_cmd_stats)

    v = sub.add_parser("serve", help="start the interactive session service")
    v.add_argument("--addr", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.add_argument("--log-dir", default=None)
    v.add_argument("--ui-dir", default=None)
    v.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 3
    except PreflocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
