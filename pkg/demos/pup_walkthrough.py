"""A small building loses zones and sensors one tick at a time.

Run with ``python3 demos/pup_walkthrough.py``. The script builds the
two-row building with entrances at row length 2, encodes it once, and then
replays a short fault stream, printing the unit layout after every tick.
"""
from streamcdcl import BanditPolicy, RL, encode_pup, gen_pup_stream, open_session
from streamcdcl.checkers import check_pup
from streamcdcl.encodings import decode_pup, pup_instance_from_state


def show(solution):
    units = {}
    for a, b in sorted(solution.edges):
        if not a.startswith("u"):
            units.setdefault(b, []).append(a)
    links = sorted((a, b) for a, b in solution.edges if a.startswith("u"))
    for u in sorted(units):
        print(f"    {u}: {' '.join(units[u])}")
    print(f"    links: {', '.join(f'{a}-{b}' for a, b in links) or 'none'}")


def main():
    base, deltas = gen_pup_stream(2, 8, seed=3, entrances=True)
    print(f"{len(base.zones)} zones, {len(base.sensors)} sensors, {len(base.units)} units")
    enc = encode_pup(base)
    print(f"encoded once: {enc.atom_count} atoms, {len(enc.clauses)} clauses, "
          f"{len(enc.selectors)} fault selectors\n")

    session = open_session(enc, RL(BanditPolicy(lam=0.5)))
    for d in deltas:
        r = session.process_tick(d)
        change = [f"+{a}" for a in sorted(d.add)] + [f"-{a}" for a in sorted(d.remove)]
        print(f"tick {r.tick}: {' '.join(change) or '(no change)'}")
        print(f"  {r.status} in {r.wall_time * 1000:.1f} ms, {r.conflicts} conflicts, "
              f"cache {r.active} active / {r.frozen} frozen")
        if r.assignment is not None:
            state = pup_instance_from_state(base, r.true_atoms)
            sol = decode_pup(r.assignment, state, enc)
            assert check_pup(state, sol)
            show(sol)


if __name__ == "__main__":
    main()
