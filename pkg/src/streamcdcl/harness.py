"""Experiment driver: replay streams under several strategies, write CSV, summarize.

One CSV holds every (strategy, lambda, tick) row for a single stream, i.e.
one (problem size, seed) cell. A ``<csv>.meta.json`` sidecar records the
problem, size, seed and per-session build times so summaries can separate
encoding and solver construction from per-tick solving.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .cache import BanditPolicy
from .checkers import check_pup, check_qc
from .encodings import (
    PupInstance,
    QcInstance,
    decode_pup,
    decode_qc,
    encode_pup,
    encode_qc,
    parse_queen_atom,
    pup_instance_from_state,
)
from .engine import MODEL
from .generator import (
    PUP_SCHEMA,
    QC_SCHEMA,
    gen_pup_stream,
    gen_qc_stream,
    initial_true_atoms,
)
from .session import Strategy, open_session

log = logging.getLogger("streamcdcl")

CSV_HEADER = (
    "tick", "strategy", "lambda", "status", "wall_ms", "conflicts",
    "decisions", "active", "frozen", "deleted", "new_learned",
)

DEFAULTS = {
    "pup": {"alpha": 2.2, "p_restore": 0.8, "schema": PUP_SCHEMA},
    "qc": {"alpha": 1.35, "p_restore": 0.95, "schema": QC_SCHEMA},
}


class EmptyInput(ValueError):
    pass


def configure_logging() -> None:
    """Log level comes from STREAMCDCL_LOG (e.g. DEBUG, INFO); default WARNING."""
    level = os.environ.get("STREAMCDCL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


@dataclass
class ExperimentConfig:
    problem: str
    sizes: Sequence[int]
    strategies: Sequence[str] = ("mrestart", "rl")
    lambdas: Sequence[float] = (0.01, 0.1, 0.5, 1.0)
    ticks: int = 256
    alpha: Optional[float] = None
    p_restore: Optional[float] = None
    schema: Optional[Sequence[str]] = None
    seeds: Sequence[int] = (0,)
    k: int = 3000
    n_store: int = 6000
    timeout: Optional[float] = None
    out: str = "results"
    validate: bool = False

    def __post_init__(self):
        if self.problem not in DEFAULTS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if not self.sizes or not self.strategies or not self.seeds:
            raise ValueError("sizes, strategies and seeds must be non-empty")
        if any(s in ("rl", "ps", "c") for s in self.strategies) and not self.lambdas:
            raise ValueError("learning strategies need at least one lambda")
        d = DEFAULTS[self.problem]
        if self.alpha is None:
            self.alpha = d["alpha"]
        if self.p_restore is None:
            self.p_restore = d["p_restore"]
        if self.schema is None:
            self.schema = d["schema"]
        self.schema = tuple(self.schema)


@dataclass
class StreamProblem:
    """A generated (or loaded) stream together with its encoding."""

    problem: str
    instance: object
    deltas: list
    encoding: object
    encode_time: float
    initial_true: frozenset = frozenset()


def build_problem(problem: str, instance, deltas) -> StreamProblem:
    t0 = time.perf_counter()
    if problem == "pup":
        enc = encode_pup(instance)
    else:
        enc = encode_qc(instance.n)
    return StreamProblem(problem, instance, list(deltas), enc, time.perf_counter() - t0,
                         initial_true_atoms(instance))


def generate_problem(cfg: ExperimentConfig, size: int, seed: int) -> StreamProblem:
    if cfg.problem == "pup":
        inst, deltas = gen_pup_stream(size, cfg.ticks, seed, cfg.alpha, cfg.p_restore, cfg.schema)
    else:
        inst, deltas = gen_qc_stream(size, cfg.ticks, seed, cfg.alpha, cfg.p_restore, cfg.schema)
    return build_problem(cfg.problem, inst, deltas)


def strategy_cells(strategies, lambdas, k: int = 3000, n_store: int = 6000):
    """(Strategy, lambda) pairs; mrestart has no lambda and appears once."""
    for kind in strategies:
        if kind == "mrestart":
            yield Strategy("mrestart"), None
        else:
            for lam in lambdas:
                yield Strategy(kind, BanditPolicy(lam=lam, k=k, n_store=n_store)), lam


def model_is_valid(sp: StreamProblem, true_atoms, assignment) -> bool:
    """Decode a model and hand it to the independent checker."""
    if sp.problem == "pup":
        inst = pup_instance_from_state(sp.instance, true_atoms)
        return check_pup(inst, decode_pup(assignment, inst, sp.encoding))
    n = sp.instance.n
    placed = [parse_queen_atom(a) for a in true_atoms]
    return check_qc(n, decode_qc(assignment, n, sp.encoding), placed)


@dataclass
class SessionRun:
    strategy: str
    lam: Optional[float]
    results: list
    build_time: float
    invalid_ticks: list = field(default_factory=list)

    def wall_ms(self) -> np.ndarray:
        return np.array([r.wall_time * 1000 for r in self.results])


def run_session(sp: StreamProblem, strategy: Strategy, lam=None, seed: Optional[int] = None,
                timeout: Optional[float] = None, validate: bool = False, on_tick=None) -> SessionRun:
    s = open_session(sp.encoding, strategy, seed, initial_true=sp.initial_true, timeout=timeout)
    run = SessionRun(strategy.kind, lam, [], s.build_time)
    for d in sp.deltas:
        r = s.process_tick(d)
        if validate and r.status == MODEL and not model_is_valid(sp, r.true_atoms, r.assignment):
            run.invalid_ticks.append(r.tick)
        if on_tick is not None:
            on_tick(s, r)
        r.assignment = None  # keep memory flat over long streams
        run.results.append(r)
        log.debug("%s lam=%s tick %d %s %.1f ms", strategy.kind, lam, r.tick, r.status, r.wall_time * 1000)
    return run


def csv_rows(run: SessionRun):
    lam = "" if run.lam is None else repr(float(run.lam))
    for r in run.results:
        yield (r.tick, run.strategy, lam, r.status, f"{r.wall_time * 1000:.3f}", r.conflicts,
               r.decisions, r.active, r.frozen, r.deleted, r.new_learned)


def write_csv(path, runs: Iterable[SessionRun], meta: Optional[dict] = None) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for run in runs:
                w.writerows(csv_rows(run))
        if meta is not None:
            meta_path(path).write_text(json.dumps(meta, indent=1) + "\n")
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e}") from e
    return path


def meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".meta.json")


def run_problem(sp: StreamProblem, cfg: ExperimentConfig, seed: int) -> list:
    runs = []
    for strat, lam in strategy_cells(cfg.strategies, cfg.lambdas, cfg.k, cfg.n_store):
        log.info("running %s lam=%s on %d ticks", strat.kind, lam, len(sp.deltas))
        runs.append(run_session(sp, strat, lam, seed, cfg.timeout, cfg.validate))
    return runs


def run_experiment(cfg: ExperimentConfig) -> list:
    """Run every (size, seed) cell and return the CSV paths written.

    If ``cfg.out`` ends in ``.csv`` the grid must be a single cell and the
    rows go to that file; otherwise ``cfg.out`` is a directory receiving one
    ``<problem>-<size>-seed<seed>.csv`` per cell.
    """
    out = Path(cfg.out)
    single = out.suffix == ".csv"
    if single and len(cfg.sizes) * len(cfg.seeds) != 1:
        raise ValueError("a .csv output path takes exactly one size and one seed")
    paths = []
    for size in cfg.sizes:
        for seed in cfg.seeds:
            sp = generate_problem(cfg, size, seed)
            runs = run_problem(sp, cfg, seed)
            meta = experiment_meta(cfg.problem, size, seed, sp, runs)
            path = out if single else out / f"{cfg.problem}-{size}-seed{seed}.csv"
            paths.append(write_csv(path, runs, meta))
    return paths


def experiment_meta(problem, size, seed, sp: StreamProblem, runs) -> dict:
    return {
        "problem": problem,
        "size": size,
        "seed": seed,
        "ticks": len(sp.deltas),
        "atoms": sp.encoding.atom_count,
        "clauses": len(sp.encoding.clauses),
        "encode_s": sp.encode_time,
        "build_s": {f"{r.strategy}|{'' if r.lam is None else repr(float(r.lam))}": r.build_time for r in runs},
        "invalid_ticks": {f"{r.strategy}|{r.lam}": r.invalid_ticks for r in runs if r.invalid_ticks},
    }


# ----------------------------------------------------------------------
# summaries


@dataclass
class SummaryRow:
    size: Optional[int]
    strategy: str
    lam: Optional[float]
    n: int
    median: float
    q1: float
    q3: float
    min: float
    max: float
    outliers: list
    first_tick_ms: float
    first_tick_outlier: bool
    mean_encode_s: Optional[float] = None
    mean_build_s: Optional[float] = None


def box_stats(values) -> dict:
    """Type-7 quartiles, min/max and 1.5 IQR outliers."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyInput("no values to summarize")
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    out = x[(x < lo) | (x > hi)]
    return {
        "median": float(med), "q1": float(q1), "q3": float(q3),
        "min": float(x.min()), "max": float(x.max()),
        "outliers": [float(v) for v in out], "fences": (float(lo), float(hi)),
    }


def read_results(path) -> list:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise OSError(f"cannot read results from {path}: {e}") from e
    return rows


def summarize(paths, out=None) -> list:
    """Summary rows per (size, strategy, lambda) over one or more result CSVs."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    groups = {}
    enc_times, build_times = {}, {}
    for p in paths:
        rows = read_results(p)
        meta = {}
        if meta_path(p).exists():
            meta = json.loads(meta_path(p).read_text())
        size = meta.get("size")
        for row in rows:
            key = (size, row["strategy"], row["lambda"])
            groups.setdefault(key, []).append((int(row["tick"]), float(row["wall_ms"])))
        for label, t in meta.get("build_s", {}).items():
            strat, lam = label.split("|")
            build_times.setdefault((size, strat, lam), []).append(t)
            enc_times.setdefault((size, strat, lam), []).append(meta["encode_s"])
    if not groups:
        raise EmptyInput(f"no result rows in {', '.join(map(str, paths))}")

    table = []
    for key in sorted(groups, key=lambda k: (k[0] is None, k[0] or 0, k[1], k[2])):
        size, strat, lam = key
        ticks = sorted(groups[key])
        st = box_stats([w for _, w in ticks])
        first = ticks[0][1]
        table.append(SummaryRow(
            size, strat, float(lam) if lam else None, len(ticks),
            st["median"], st["q1"], st["q3"], st["min"], st["max"], st["outliers"],
            first, not (st["fences"][0] <= first <= st["fences"][1]),
            float(np.mean(enc_times[key])) if key in enc_times else None,
            float(np.mean(build_times[key])) if key in build_times else None,
        ))
    if out is not None:
        Path(out).write_text(json.dumps([asdict(r) for r in table], indent=1) + "\n")
    return table


def median_ms(runs, strategy: str, lam=None) -> float:
    for r in runs:
        if r.strategy == strategy and (lam is None or r.lam == lam):
            return float(np.median(r.wall_ms()))
    raise KeyError((strategy, lam))
