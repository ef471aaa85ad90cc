"""Run algorithms over instance sets and tabulate objective, bound and time."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..baselines import aggregate, aggregate_pr, average_layers, pick_a_best
from ..errors import Deadline, NotConverged, SolverTimeout
from ..exact import DEFAULT_CAP, exact_clustering
from ..instance import Clustering, MultilayerInstance, Norm, objective
from ..pivot import best_candidate, kwik_cluster, layer_candidates, lp_kwik_cluster, threshold_round
from ..region_growing import DEFAULT_C, grow_regions
from ..relax import solve_relaxation

CSV_COLUMNS = ("dataset", "n", "L", "p", "algorithm", "seed", "objective", "lower_bound", "ratio", "time_s", "status")


class _Context:
    """Per-cell cache of relaxations; reused solves still charge their time."""

    def __init__(self, deadline: Deadline):
        self.deadline = deadline
        self.store: dict = {}
        self.charged = 0.0

    def relax(self, key, instance, norm):
        if key not in self.store:
            t0 = time.perf_counter()
            self.store[key] = (solve_relaxation(instance, norm, deadline=self.deadline), time.perf_counter() - t0)
            return self.store[key][0]
        sol, seconds = self.store[key]
        self.charged += seconds
        return sol


def _rg(inst, norm, seed, ctx, c):
    return grow_regions(inst, ctx.relax("main", inst, norm), c, deadline=ctx.deadline).clustering


def _threshold(inst, norm, seed, ctx, c):
    return threshold_round(inst, ctx.relax("main", inst, norm))


def _pick_lp_kwik(inst, norm, seed, ctx, c):
    def solver(i, l):
        return lp_kwik_cluster(i, ctx.relax(("layer", l), i.layer(l), 1), seed)

    return best_candidate(inst, norm, layer_candidates(inst, solver, ctx.deadline))[1]


def _pick_kwik(inst, norm, seed, ctx, c):
    return best_candidate(inst, norm, layer_candidates(inst, lambda i, l: kwik_cluster(i, l, seed), ctx.deadline))[1]


def _aggpr(variant):
    def run(inst, norm, seed, ctx, c):
        solution = ctx.relax("avg", average_layers(inst), 1) if variant == "lp_kwik" else None
        return aggregate_pr(inst, norm, variant, seed, solution=solution, deadline=ctx.deadline)

    return run


@dataclass(frozen=True)
class Algorithm:
    name: str
    label: str
    runner: Callable
    randomized: bool = False
    modes: tuple[str, ...] = ("general", "probability", "probability+triangle")


PROB = ("probability", "probability+triangle")
ALGORITHMS: dict[str, Algorithm] = {
    a.name: a
    for a in [
        Algorithm("rg", "Region growing", _rg),
        Algorithm("pickbest", "Pick-a-Best", lambda i, n, s, ctx, c: pick_a_best(i, n, c, deadline=ctx.deadline)),
        Algorithm("agg", "Aggregate", lambda i, n, s, ctx, c: aggregate(i, n, c, deadline=ctx.deadline)),
        Algorithm("lpkwik", "Pick-best (LP-Kwik)", _pick_lp_kwik, True, PROB),
        Algorithm("kwik", "Pick-best (Kwik)", _pick_kwik, True, PROB),
        Algorithm("threshold", "Threshold", _threshold, False, PROB),
        Algorithm("aggpr", "Aggregate-Pr (LP)", _aggpr("lp_kwik"), True, PROB),
        Algorithm("aggpr_kwik", "Aggregate-Pr (no LP)", _aggpr("kwik"), True, PROB),
        Algorithm("exact", "Exact", lambda i, n, s, ctx, c: exact_clustering(i, n, DEFAULT_CAP, deadline=ctx.deadline)),
    ]
}


def run_algorithm(name: str, instance: MultilayerInstance, norm, seed: int | None = 0, c: float = DEFAULT_C,
                  deadline: Deadline | None = None) -> Clustering:
    """Run one registered algorithm once (used by the CLI ``solve`` command)."""
    alg = ALGORITHMS[name]
    if instance.mode.value not in alg.modes:
        raise ValueError(f"{name} does not apply to {instance.mode.value} instances")
    return alg.runner(instance, Norm.parse(norm), seed, _Context(deadline or Deadline(None)), c)


@dataclass
class BenchRecord:
    dataset: str
    n: int
    L: int
    p: str
    algorithm: str
    seed: int
    objective: float
    lower_bound: float
    ratio: float
    time_s: float
    status: str  # "ok", "OT" or "nonconverged"

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            caster = {"int": int, "float": float, "str": str}[f.type]
            setattr(self, f.name, caster(value))
        if self.status == "ok":
            if not self.ratio >= 1 - 1e-9:
                raise ValueError(f"ratio {self.ratio} below 1 for {self.algorithm} on {self.dataset}")
            if self.time_s < 0:
                raise ValueError("negative time")


def certified_ratio(value: float, bound: float) -> float:
    if bound > 0:
        return value / bound
    return 1.0 if value <= 1e-12 else math.inf


def _cell(args) -> list[BenchRecord]:
    dataset, instance, alg_name, norm, seeds, timeout, c, bound = args
    alg = ALGORITHMS[alg_name]
    out = []
    deadline = Deadline(timeout)
    ctx = _Context(deadline)
    for seed in seeds:
        deadline.start = time.perf_counter()
        ctx.charged = 0.0
        status, value = "ok", math.nan
        try:
            clustering = alg.runner(instance, norm, seed, ctx, c)
            value = objective(instance, clustering, norm)
        except SolverTimeout:
            status = "OT"
        except NotConverged:
            status = "nonconverged"
        elapsed = deadline.elapsed() + ctx.charged
        if timeout is not None and elapsed > timeout:
            status, value = "OT", math.nan
        ratio = certified_ratio(value, bound) if status == "ok" else math.nan
        out.append(BenchRecord(dataset, instance.n, instance.L, str(norm), alg_name, seed, value, bound, ratio,
                               elapsed, status))
    return out


def run_bench(
    instances: Sequence[tuple[str, MultilayerInstance]],
    algorithms: Sequence[str],
    norm: "Norm | float | str" = math.inf,
    seed: int = 0,
    repeats: int = 10,
    timeout: float | None = 3600.0,
    c: float = DEFAULT_C,
    workers: int = 1,
) -> list[BenchRecord]:
    """Every applicable algorithm on every instance.

    Randomised algorithms run ``repeats`` times with seeds ``seed, seed+1, ...``;
    deterministic ones run once with ``seed``. The lower bound column is the
    relaxation value for ``norm``. Rows come back in (instance, algorithm,
    seed) order regardless of ``workers``.
    """
    norm = Norm.parse(norm)
    for name in algorithms:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}")
    jobs = []
    for dataset, instance in instances:
        try:
            bound = solve_relaxation(instance, norm, deadline=Deadline(timeout)).lower_bound
        except (SolverTimeout, NotConverged):
            bound = math.nan
        for name in algorithms:
            alg = ALGORITHMS[name]
            if instance.mode.value not in alg.modes:
                continue
            seeds = [seed + r for r in range(repeats)] if alg.randomized else [seed]
            jobs.append((dataset, instance, name, norm, seeds, timeout, c, bound))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_cell, jobs))
    else:
        chunks = [_cell(job) for job in jobs]
    return [rec for chunk in chunks for rec in chunk]


# --------------------------------------------------------------------------
# output


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: Iterable[BenchRecord], include_time: bool = True) -> str:
    buf = io.StringIO()
    cols = [c for c in CSV_COLUMNS if include_time or c != "time_s"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        row = asdict(rec)
        writer.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def write_csv(records: Iterable[BenchRecord], path: str | Path, include_time: bool = True) -> None:
    Path(path).write_text(records_to_csv(records, include_time), encoding="utf-8")


def read_csv(path_or_text: str | Path) -> list[BenchRecord]:
    """Load records written by :func:`write_csv`, checking the header."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    return [BenchRecord(*row) for row in reader]


@dataclass
class Summary:
    dataset: str
    algorithm: str
    runs: int
    mean: float
    std: float
    time_s: float
    lower_bound: float
    status: str


def summarize(records: Sequence[BenchRecord]) -> list[Summary]:
    """Mean and sample standard deviation of the objective per (dataset, algorithm)."""
    groups: dict[tuple[str, str], list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.dataset, rec.algorithm), []).append(rec)
    out = []
    for (dataset, alg), recs in groups.items():
        ok = [r for r in recs if r.status == "ok"]
        if ok:
            vals = [r.objective for r in ok]
            std = statistics.stdev(vals) if len(vals) > 1 else 0.0
            out.append(Summary(dataset, alg, len(ok), statistics.fmean(vals), std,
                               statistics.fmean(r.time_s for r in ok), recs[0].lower_bound, "ok"))
        else:
            out.append(Summary(dataset, alg, 0, math.nan, math.nan, math.nan, recs[0].lower_bound, recs[0].status))
    return out


def format_table(records: Sequence[BenchRecord]) -> str:
    """Aligned text table: one row per dataset, ``mean (± std) / time`` per algorithm.

    The best mean objective of each row is marked with ``*``.
    """
    summaries = summarize(records)
    datasets = list(dict.fromkeys(s.dataset for s in summaries))
    algs = list(dict.fromkeys(s.algorithm for s in summaries))
    by = {(s.dataset, s.algorithm): s for s in summaries}
    header = ["dataset", "LB"] + [ALGORITHMS[a].label if a in ALGORITHMS else a for a in algs]
    rows = []
    for d in datasets:
        cells = [by.get((d, a)) for a in algs]
        means = [s.mean for s in cells if s is not None and s.status == "ok"]
        best = min(means) if means else None
        lb = next(s.lower_bound for s in cells if s is not None)
        row = [d, f"{lb:.3f}"]
        for s in cells:
            if s is None:
                row.append("-")
            elif s.status != "ok":
                row.append(s.status)
            else:
                mark = "*" if best is not None and s.mean <= best + 1e-12 else ""
                spread = f" ±{s.std:.3f}" if s.runs > 1 else ""
                row.append(f"{mark}{s.mean:.3f}{spread} / {s.time_s:.2f}s")
        rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def write_gnuplot(records: Sequence[BenchRecord], stem: str | Path) -> tuple[Path, Path]:
    """Write ``<stem>.dat`` (one row per dataset, mean objective per algorithm) and ``<stem>.gp``."""
    stem = Path(stem)
    summaries = summarize(records)
    datasets = list(dict.fromkeys(s.dataset for s in summaries))
    algs = list(dict.fromkeys(s.algorithm for s in summaries))
    by = {(s.dataset, s.algorithm): s for s in summaries}
    dat = stem.with_suffix(".dat")
    lines = ["# dataset LB " + " ".join(algs)]
    for d in datasets:
        lb = next(s.lower_bound for s in summaries if s.dataset == d)
        vals = [by[(d, a)].mean if (d, a) in by else math.nan for a in algs]
        lines.append(" ".join([d, repr(lb)] + ["NaN" if math.isnan(v) else repr(v) for v in vals]))
    dat.write_text("\n".join(lines) + "\n", encoding="utf-8")
    gp = stem.with_suffix(".gp")
    plots = ", ".join(f"'{dat.name}' using {i + 3}:xtic(1) title '{a}'" for i, a in enumerate(algs))
    gp.write_text(
        "set terminal pngcairo size 1000,500\n"
        f"set output '{stem.name}.png'\n"
        "set style data histograms\nset style fill solid 0.8 border -1\n"
        "set ylabel 'objective'\nset xtics rotate by -30\n"
        f"plot '{dat.name}' using 2:xtic(1) title 'LB', {plots}\n",
        encoding="utf-8",
    )
    return dat, gp


# --------------------------------------------------------------------------
# config files
#
#   # comment
#   key = value
#
# Keys: name, mode, p, algorithms (comma separated), repeats, seed, timeout
# (seconds or "none"), c, workers, output, and any number of instance
# sources:
#   synthetic = n=30 L=4 seeds=0-19 [communities=3 p_in=0.6 p_out=0.1 shuffle=0.1]
#   edgelist  = path layers=L [seeds=0-4]
#   instance  = path


SOURCE_KEYS = ("synthetic", "edgelist", "instance")


@dataclass
class BenchConfig:
    name: str = "bench"
    mode: str = "general"
    p: str = "inf"
    algorithms: tuple[str, ...] = ("rg", "pickbest", "agg")
    repeats: int = 10
    seed: int = 0
    timeout: float | None = 3600.0
    c: float = DEFAULT_C
    workers: int = 1
    output: str = "bench_out"
    sources: list[tuple[str, str]] = None

    def __post_init__(self):
        if self.sources is None:
            self.sources = []


def parse_seeds(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _options(text: str) -> tuple[list[str], dict[str, str]]:
    positional, opts = [], {}
    for tok in text.split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            opts[k] = v
        else:
            positional.append(tok)
    return positional, opts


def parse_config(text: str, base: Path | None = None) -> BenchConfig:
    cfg = BenchConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in SOURCE_KEYS:
            cfg.sources.append((key, value))
        elif key == "algorithms":
            cfg.algorithms = tuple(a.strip() for a in value.split(",") if a.strip())
        elif key in ("repeats", "seed", "workers"):
            setattr(cfg, key, int(value))
        elif key == "c":
            cfg.c = float(value)
        elif key == "timeout":
            cfg.timeout = None if value.lower() == "none" else float(value)
        elif key in ("name", "mode", "p", "output"):
            setattr(cfg, key, value)
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    if base is not None:
        cfg.sources = [
            (kind, value if kind == "synthetic" else _rebase(value, base)) for kind, value in cfg.sources
        ]
    return cfg


def _rebase(value: str, base: Path) -> str:
    head, *rest = value.split()
    path = Path(head)
    if not path.is_absolute():
        path = base / path
    return " ".join([str(path)] + rest)


def load_instances(cfg: BenchConfig) -> list[tuple[str, MultilayerInstance]]:
    from ..instance import read_instance
    from .network import generate_instance, ingest_edgelist, planted_network

    out = []
    for kind, value in cfg.sources:
        positional, opts = _options(value)
        if kind == "synthetic":
            n, L = int(opts["n"]), int(opts["L"])
            extra = {k: float(opts[k]) for k in ("p_in", "p_out", "shuffle") if k in opts}
            extra.update({k: int(opts[k]) for k in ("communities", "max_weight") if k in opts})
            for s in parse_seeds(opts.get("seeds", "0")):
                net = planted_network(n, L, seed=s, **extra)
                out.append((f"synth-n{n}-L{L}-s{s}", generate_instance(net, cfg.mode, seed=s)))
        elif kind == "edgelist":
            path = Path(positional[0])
            net = ingest_edgelist(path, int(opts["layers"]))
            for s in parse_seeds(opts.get("seeds", "0")):
                out.append((f"{path.stem}-s{s}", generate_instance(net, cfg.mode, seed=s)))
        else:
            path = Path(positional[0])
            out.append((path.stem, read_instance(path)))
    return out


def run_config(cfg: BenchConfig) -> list[BenchRecord]:
    return run_bench(load_instances(cfg), cfg.algorithms, cfg.p, cfg.seed, cfg.repeats, cfg.timeout, cfg.c, cfg.workers)
