"""Command line entry point: ``capam {generate,train,eval,baseline,bench,gradcheck}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .benchmark import (BENCH_COLUMNS, EVAL_COLUMNS, SOLVERS, bench_rows, completion_matrix, timed_solve,
                        write_rows, write_table)
from .instances import (SuiteSpec, generate_batch, generate_suite, instance_filename, load_instances,
                        save_instance)
from .model import CapAM
from .simulator import task_completion_percent
from .trainer import TrainConfig, Trainer

SEED_ENV = "CAPAM_SEED"


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get(SEED_ENV, 0))


def cmd_generate(args) -> int:
    seed = _seed(args)
    out = Path(args.out)
    if args.suite:
        spec = SuiteSpec(name=args.suite, n_tasks=args.tasks or 100, integer_capacity=args.integer_capacity)
        instances = generate_suite(spec, seed)
    else:
        if not args.tasks or not args.robots:
            raise ValueError("--tasks and --robots are required without --suite")
        instances = generate_batch(args.count, args.tasks, args.robots, seed)
    if len(instances) == 1 and out.suffix == ".json":
        out.parent.mkdir(parents=True, exist_ok=True)
        save_instance(instances[0], out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        for i, inst in enumerate(instances):
            save_instance(inst, out / instance_filename(inst, i))
    print(f"wrote {len(instances)} instance file(s) to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.seed is not None or SEED_ENV in os.environ:
        cfg["seed"] = _seed(args)
    config = TrainConfig.from_dict(cfg)
    trainer = Trainer(config)
    trainer.fit(args.out_dir)
    print(f"trained {trainer.policy.n_parameters()} parameters; outputs in {args.out_dir}")
    return 0


def _solver_rows(named, solver, seed, model, budget, timing, mode="greedy"):
    rows = []
    for name, inst in named:
        result, ms = timed_solve(solver, inst, seed=seed, model=model, ils_budget=budget, mode=mode)
        rows.append({"instance": name, "f_cost": repr(result.f_cost),
                     "completion_pct": repr(task_completion_percent(result)),
                     "latency_ms": repr(ms) if timing else ""})
    return rows


def _report(rows, out):
    if out:
        write_rows(out, EVAL_COLUMNS, rows)
    else:
        import csv
        w = csv.DictWriter(sys.stdout, fieldnames=list(EVAL_COLUMNS), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    costs = [float(r["f_cost"]) for r in rows]
    comp = [float(r["completion_pct"]) for r in rows]
    print(f"{len(rows)} instances: mean cost {np.mean(costs):.4f}, mean completion {np.mean(comp):.2f}%",
          file=sys.stderr)


def cmd_eval(args) -> int:
    model = CapAM.load(args.checkpoint)
    named = load_instances(args.instances)
    _report(_solver_rows(named, "capam", _seed(args), model, 0, args.timing, args.mode), args.out)
    return 0


def cmd_baseline(args) -> int:
    named = load_instances(args.instances)
    _report(_solver_rows(named, args.solver, _seed(args), None, args.ils_budget, args.timing), args.out)
    return 0


def cmd_bench(args) -> int:
    named = load_instances(args.instances)
    model = CapAM.load(args.checkpoint) if args.checkpoint else None
    solvers = (["capam"] if model is not None else []) + list(args.solvers)
    rows = bench_rows(named, solvers, _seed(args), model, args.ils_budget, args.timing)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "bench.csv", BENCH_COLUMNS, rows)
    header, table = completion_matrix(rows)
    write_table(out / "completion_matrix.csv", header, table)
    print(f"wrote {len(rows)} rows to {out / 'bench.csv'}")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradchecks import TOLERANCE, run_all
    results = run_all(_seed(args))
    ok = True
    for name, err in results.items():
        passed = err < TOLERANCE
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: max rel. err {err:.3e}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capam", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None, help=f"master seed (default: ${SEED_ENV} or 0)")
        return sp

    def timing(sp):
        sp.add_argument("--no-timing", dest="timing", action="store_false",
                        help="leave latency_ms empty so outputs are byte-reproducible")
        return sp

    g = seeded(sub.add_parser("generate", help="write instance files"))
    g.add_argument("--suite", help="build the 96-case tight/slack suite under this name")
    g.add_argument("--tasks", type=int)
    g.add_argument("--robots", type=int)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--integer-capacity", action="store_true")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = seeded(sub.add_parser("train", help="REINFORCE training"))
    t.add_argument("--config", help="JSON file with TrainConfig fields")
    t.add_argument("--out-dir", required=True)
    t.set_defaults(func=cmd_train)

    e = timing(seeded(sub.add_parser("eval", help="evaluate a checkpoint")))
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--instances", required=True)
    e.add_argument("--mode", choices=("greedy", "sample"), default="greedy")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    b = timing(seeded(sub.add_parser("baseline", help="run a non-learning solver")))
    b.add_argument("--solver", choices=SOLVERS, required=True)
    b.add_argument("--instances", required=True)
    b.add_argument("--ils-budget", type=float, default=1.0, help="seconds per instance")
    b.add_argument("--out")
    b.set_defaults(func=cmd_baseline)

    s = timing(seeded(sub.add_parser("bench", help="checkpoint + baselines, summary CSVs")))
    s.add_argument("--checkpoint")
    s.add_argument("--instances", required=True)
    s.add_argument("--solvers", nargs="+", choices=SOLVERS, default=["myopic", "bigmrta", "ils", "oracle"])
    s.add_argument("--ils-budget", type=float, default=1.0)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_bench)

    c = seeded(sub.add_parser("gradcheck", help="finite-difference gradient checks"))
    c.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"capam {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
