"""Command line: ``mlcc validate|gen|solve|bench``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from ..errors import Deadline, MLCCError, SolverTimeout
from ..instance import Mode, Norm, disagreements, objective, read_instance, validate, write_instance
from ..relax import solve_relaxation
from ..region_growing import DEFAULT_C
from .harness import (
    ALGORITHMS,
    format_table,
    parse_config,
    records_to_csv,
    run_algorithm,
    run_config,
    write_gnuplot,
)
from .network import generate_instance, ingest_edgelist, planted_network

SOLVE_ALGS = ("rg", "pickbest", "agg", "kwik", "lpkwik", "threshold", "aggpr", "exact")


def _cmd_validate(args) -> int:
    inst = read_instance(args.instance)
    problems = validate(inst, tol=args.tol)
    print(f"{args.instance}: mode={inst.mode.value} n={inst.n} L={inst.L}")
    for v in problems:
        print(f"  {v}")
    print("ok" if not problems else f"{len(problems)} violation(s)")
    return 0 if not problems else 1


def _cmd_gen(args) -> int:
    if args.edgelist:
        if args.layers is None:
            raise SystemExit("--layers is required with --edgelist")
        net = ingest_edgelist(args.edgelist, args.layers)
    else:
        net = planted_network(args.n, args.L, seed=args.seed, communities=args.communities)
    inst = generate_instance(net, args.mode, seed=args.seed)
    if args.output:
        write_instance(inst, args.output)
    else:
        from ..instance import dumps

        sys.stdout.write(dumps(inst))
    return 0


def _cmd_solve(args) -> int:
    inst = read_instance(args.instance)
    norm = Norm.parse(args.p)
    deadline = Deadline(args.timeout)
    t0 = time.perf_counter()
    clustering = run_algorithm(args.alg, inst, norm, args.seed, args.c, deadline)
    elapsed = time.perf_counter() - t0
    value = objective(inst, clustering, norm)
    print(f"algorithm {args.alg}")
    print(f"p {norm}")
    print(f"objective {value!r}")
    if args.bound:
        lb = solve_relaxation(inst, norm).lower_bound
        print(f"lower_bound {lb!r}")
    print("disagreements " + " ".join(repr(float(d)) for d in disagreements(inst, clustering)))
    print(f"clusters {clustering.k}")
    for members in clustering.clusters():
        print(" ".join(map(str, members)))
    if args.time:
        print(f"time_s {elapsed:.6f}")
    return 0


def _cmd_bench(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"), base=Path(args.config).parent)
    if args.timeout is not None:
        cfg.timeout = args.timeout
    if args.workers is not None:
        cfg.workers = args.workers
    out = Path(args.output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    records = run_config(cfg)
    (out / f"{cfg.name}.csv").write_text(records_to_csv(records, include_time=not args.no_time), encoding="utf-8")
    table = format_table(records)
    (out / f"{cfg.name}.txt").write_text(table, encoding="utf-8")
    write_gnuplot(records, out / cfg.name)
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlcc", description="Multilayer correlation clustering tools.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file against its mode's constraints")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gen", help="generate an instance from an edge list or a planted network")
    p.add_argument("--edgelist", help="whitespace separated 'u v layer weight' file")
    p.add_argument("--layers", type=int, help="layer count of the edge list")
    p.add_argument("--n", type=int, default=20, help="vertices of the planted network")
    p.add_argument("--L", type=int, default=3, help="layers of the planted network")
    p.add_argument("--communities", type=int, default=3)
    p.add_argument("--mode", choices=[m.value for m in Mode], default="general")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="instance file to write (default: stdout)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="run one algorithm on an instance file")
    p.add_argument("instance")
    p.add_argument("--alg", choices=SOLVE_ALGS + tuple(a for a in ALGORITHMS if a not in SOLVE_ALGS), default="rg")
    p.add_argument("--p", default="inf", help="norm exponent: a number >= 1 or 'inf'")
    p.add_argument("--c", type=float, default=DEFAULT_C, help="region-growing constant (> 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timeout", type=float, default=None, help="cooperative time limit in seconds")
    p.add_argument("--bound", action="store_true", help="also print the relaxation lower bound")
    p.add_argument("--time", action="store_true", help="print wall time (makes output nondeterministic)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", help="output directory (overrides the config)")
    p.add_argument("--timeout", type=float, default=None, help="per-run time limit in seconds")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-time", action="store_true", help="omit the time_s column from the CSV")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SolverTimeout as exc:
        print(f"mlcc: timeout: {exc}", file=sys.stderr)
        return 3
    except (MLCCError, ValueError, OSError) as exc:
        print(f"mlcc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
