"""Command line: generate, run, grid, summarize, oracle."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .encodings import PupInstance, QcInstance, parse_queen_atom, pup_instance_from_state, read_instance
from .generator import gen_double_pup, parse_schema, read_stream, write_stream, PupStream, QcStream
from .harness import (
    DEFAULTS,
    ExperimentConfig,
    build_problem,
    configure_logging,
    experiment_meta,
    run_experiment,
    run_session,
    strategy_cells,
    summarize,
    write_csv,
)
from .oracle import pup_satisfiable, qc_satisfiable


def instance_sidecar(stream_path) -> Path:
    p = Path(stream_path)
    return p.with_name(p.stem + ".instance.json")


def cmd_generate(a) -> int:
    d = DEFAULTS[a.problem]
    alpha = d["alpha"] if a.alpha is None else a.alpha
    p = d["p_restore"] if a.p is None else a.p
    schema = parse_schema(a.schema) if a.schema else d["schema"]
    if a.problem == "pup":
        if a.row_length is None:
            raise SystemExit("generate --problem pup needs --row-length")
        base = gen_double_pup(a.row_length, entrances=a.entrances, ucap=a.ucap, iucap=a.iucap, units=a.units)
        st = PupStream(base, alpha, p, schema, a.seed)
        deltas = [st.next_delta() for _ in range(a.ticks)]
        inst = dict(base.to_json(), row_length=a.row_length)
    else:
        if a.n is None:
            raise SystemExit("generate --problem qc needs --n")
        st = QcStream(a.n, alpha, p, schema, a.seed)
        deltas = [st.next_delta() for _ in range(a.ticks)]
        inst = QcInstance(a.n, st.initial).to_json()
    write_stream(a.out, deltas)
    side = instance_sidecar(a.out)
    side.write_text(json.dumps(inst, indent=1) + "\n")
    print(f"wrote {len(deltas)} deltas to {a.out} and instance to {side}")
    return 0


def load_stream(a):
    inst_path = Path(a.instance) if a.instance else instance_sidecar(a.stream)
    if not inst_path.exists():
        raise SystemExit(f"instance file {inst_path} not found (pass --instance)")
    inst = read_instance(inst_path)
    problem = "qc" if isinstance(inst, QcInstance) else "pup"
    raw = json.loads(inst_path.read_text())
    size = inst.n if problem == "qc" else raw.get("row_length")
    return problem, size, inst, read_stream(a.stream)


def cmd_run(a) -> int:
    problem, size, inst, deltas = load_stream(a)
    sp = build_problem(problem, inst, deltas)
    lams = a.lam or [DEFAULT_LAMBDA]
    runs = []
    bad = 0
    for strat, lam in strategy_cells([a.strategy], lams, a.k, a.n):
        run = run_session(sp, strat, lam, a.seed, a.timeout, a.validate)
        bad += len(run.invalid_ticks)
        runs.append(run)
    write_csv(a.out, runs, experiment_meta(problem, size, a.seed, sp, runs))
    print(f"wrote {sum(len(r.results) for r in runs)} rows to {a.out}")
    if bad:
        print(f"{bad} models failed the independent checker", file=sys.stderr)
        return 1
    return 0


DEFAULT_LAMBDA = 0.5


def cmd_grid(a) -> int:
    cfg = ExperimentConfig(
        a.problem, a.sizes, a.strategies.split(","), a.lam or (0.01, 0.1, 0.5, 1.0), a.ticks,
        a.alpha, a.p, parse_schema(a.schema) if a.schema else None, a.seeds, a.k, a.n,
        a.timeout, a.out, a.validate,
    )
    for p in run_experiment(cfg):
        print(p)
    return 0


def cmd_summarize(a) -> int:
    table = summarize(a.inputs, a.out)
    for r in table:
        lam = "" if r.lam is None else r.lam
        print(f"size={r.size} {r.strategy:8s} lambda={lam!s:5s} median={r.median:9.2f} ms "
              f"q1={r.q1:9.2f} q3={r.q3:9.2f} outliers={len(r.outliers)}")
    return 0


def cmd_oracle(a) -> int:
    if a.instance or instance_sidecar(a.stream).exists():
        problem, _, inst, deltas = load_stream(a)
        if problem != a.problem:
            raise SystemExit(f"instance is a {problem} instance, not {a.problem}")
    else:
        if a.problem != "qc" or a.n is None:
            raise SystemExit("without an instance file only --problem qc --n N is supported")
        inst, deltas = QcInstance(a.n, frozenset()), read_stream(a.stream)
    true = set()
    if isinstance(inst, QcInstance):
        true = {f"queen({r},{c})" for r, c in inst.placed}
    for d in deltas:
        true |= d.add
        true -= d.remove
        if isinstance(inst, PupInstance):
            ok = pup_satisfiable(pup_instance_from_state(inst, true))
        else:
            ok = qc_satisfiable(inst.n, [parse_queen_atom(x) for x in true])
        print(d.tick, "model" if ok else "incoherent")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streamcdcl", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="write a delta stream and its instance file")
    g.add_argument("--problem", choices=("pup", "qc"), required=True)
    g.add_argument("--row-length", type=int)
    g.add_argument("--n", type=int, help="QC board size")
    g.add_argument("--ticks", type=int, default=256)
    g.add_argument("--alpha", type=float)
    g.add_argument("--p", type=float, help="restore probability")
    g.add_argument("--schema", help="comma separated mutation schema, e.g. m1,m3,m2,m3")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--entrances", action="store_true", help="add the two entrance zones/sensors")
    g.add_argument("--ucap", type=int, default=2)
    g.add_argument("--iucap", type=int, default=2)
    g.add_argument("--units", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="replay a stream under one strategy")
    r.add_argument("--stream", required=True)
    r.add_argument("--instance", help="instance JSON (default: <stream stem>.instance.json)")
    r.add_argument("--strategy", choices=("mrestart", "rl", "ps", "c"), required=True)
    r.add_argument("--lambda", dest="lam", type=float, action="append")
    r.add_argument("--k", type=int, default=3000)
    r.add_argument("--n", type=int, default=6000, help="cache size (active + frozen)")
    r.add_argument("--seed", type=int)
    r.add_argument("--timeout", type=float, help="per-tick timeout in seconds")
    r.add_argument("--validate", action="store_true", help="check every model independently")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("grid", help="generate and run a size x seed x strategy grid")
    e.add_argument("--problem", choices=("pup", "qc"), required=True)
    e.add_argument("--sizes", type=int, nargs="+", required=True)
    e.add_argument("--strategies", default="mrestart,rl")
    e.add_argument("--lambda", dest="lam", type=float, action="append")
    e.add_argument("--ticks", type=int, default=256)
    e.add_argument("--alpha", type=float)
    e.add_argument("--p", type=float)
    e.add_argument("--schema")
    e.add_argument("--seeds", type=int, nargs="+", default=[0])
    e.add_argument("--k", type=int, default=3000)
    e.add_argument("--n", type=int, default=6000)
    e.add_argument("--timeout", type=float)
    e.add_argument("--validate", action="store_true")
    e.add_argument("--out", default="results")
    e.set_defaults(func=cmd_grid)

    s = sub.add_parser("summarize", help="boxplot statistics from result CSVs")
    s.add_argument("--in", dest="inputs", nargs="+", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_summarize)

    o = sub.add_parser("oracle", help="reference status per tick by exhaustive search")
    o.add_argument("--problem", choices=("pup", "qc"), required=True)
    o.add_argument("--n", type=int)
    o.add_argument("--stream", required=True)
    o.add_argument("--instance")
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    configure_logging()
    a = build_parser().parse_args(argv)
    return a.func(a)
