"""Four ways to follow the same queens-completion stream.

Run with ``python3 demos/queens_strategies.py [n] [ticks]``. A board of size n
starts with a few queens of a hidden solution placed; each tick rotates,
reveals, or restores queens. The same stream is replayed from a fresh
encoding under each strategy:

    mrestart  a new engine every tick, nothing carried over
    rl        one engine; learned clauses kept in a weighted cache, top k active
    ps        one engine with saved phases but no carried clauses (k = 0)
    c         the cache without saved phases
"""
import sys

from streamcdcl import BanditPolicy, COnly, MRestart, PSOnly, RL, gen_qc_stream
from streamcdcl.harness import box_stats, build_problem, run_session


def main(n=16, ticks=64):
    inst, deltas = gen_qc_stream(n, ticks, seed=0)
    sp = build_problem("qc", inst, deltas)
    print(f"{n}x{n} board, {len(inst.placed)} queens placed at the start, {ticks} ticks")
    print(f"encoding: {sp.encoding.atom_count} atoms, {len(sp.encoding.clauses)} clauses, "
          f"built in {sp.encode_time * 1000:.0f} ms\n")

    print(f"{'strategy':10}{'median ms':>11}{'q1':>8}{'q3':>8}{'tick 0':>9}{'conflicts':>11}")
    for strat in (MRestart(), RL(BanditPolicy(lam=1.0)), PSOnly(), COnly(BanditPolicy(lam=1.0))):
        run = run_session(sp, strat, strat.lam, validate=True)
        assert not run.invalid_ticks
        ms = run.wall_ms()
        st = box_stats(ms)
        conflicts = sum(r.conflicts for r in run.results)
        print(f"{strat.kind:10}{st['median']:11.1f}{st['q1']:8.1f}{st['q3']:8.1f}{ms[0]:9.1f}{conflicts:11d}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:3]]
    main(*args)
