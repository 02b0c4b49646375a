"""Watching the learned-clause cache over a stream.

Run with ``python3 demos/cache_dynamics.py``. A deliberately small cache
(k = 20 active, 40 stored) makes the bandit's choices visible: every new
clause enters with an optimistic weight, clauses that help keep their
weight, idle ones decay, and the lowest-ranked fall out of storage.
"""
from collections import Counter

from streamcdcl import BanditPolicy, RL, gen_qc_stream, open_session
from streamcdcl.harness import build_problem


def main():
    pol = BanditPolicy(lam=0.5, k=20, n_store=40)
    inst, deltas = gen_qc_stream(12, 48, seed=1)
    sp = build_problem("qc", inst, deltas)
    s = open_session(sp.encoding, RL(pol), initial_true=sp.initial_true)
    print(f"new clauses start at w1 + lam*R, e.g. {pol.w1 + pol.lam * pol.a * (1 - 2 * 2):.0f} for LBD 2\n")
    print(f"{'tick':>4}{'conf':>6}{'new':>5}{'act':>5}{'frz':>5}{'del':>5}  top weights")

    ages = Counter()
    for d in deltas:
        r = s.process_tick(d)
        top = sorted((e.weight for e in s.cache.entries.values()), reverse=True)[:4]
        print(f"{r.tick:4d}{r.conflicts:6d}{r.new_learned:5d}{r.active:5d}{r.frozen:5d}{r.deleted:5d}  "
              + " ".join(f"{w:7.1f}" for w in top))
        for e in s.cache.entries.values():
            ages[r.tick - e.birth_tick] += 1

    survivors = sorted(s.cache.entries.values(), key=lambda e: -e.weight)[:5]
    print("\nstrongest clauses at the end:")
    for e in survivors:
        print(f"  lbd {e.lbd}  weight {e.weight:7.1f}  born at tick {e.birth_tick}  {e.status}")
    old = sum(c for age, c in ages.items() if age >= 10)
    print(f"\n{old} of {sum(ages.values())} cache slots over the run held a clause at least 10 ticks old")


if __name__ == "__main__":
    main()
