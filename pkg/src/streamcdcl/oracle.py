"""Reference answers by exhaustive search, for cross-checking the engine.

These are deliberately naive: brute-force assignment enumeration for CNF
and plain backtracking over the problem definitions for PUP and QC.
"""
from __future__ import annotations

import numpy as np

from .checkers import attacks

MAX_BRUTE_ATOMS = 22


def all_assignments(atom_count: int) -> np.ndarray:
    """Boolean matrix (2**n, n+1); column v holds atom v, column 0 is unused."""
    if atom_count > MAX_BRUTE_ATOMS:
        raise ValueError(f"refusing to enumerate 2**{atom_count} assignments")
    idx = np.arange(1 << atom_count, dtype=np.uint32)
    cols = [np.zeros(len(idx), dtype=bool)]
    cols += [((idx >> (v - 1)) & 1).astype(bool) for v in range(1, atom_count + 1)]
    return np.stack(cols, axis=1)


def satisfying_mask(clauses, atom_count: int, table=None) -> np.ndarray:
    if table is None:
        table = all_assignments(atom_count)
    ok = np.ones(len(table), dtype=bool)
    for clause in clauses:
        sat = np.zeros(len(table), dtype=bool)
        for l in clause:
            sat |= table[:, l] if l > 0 else ~table[:, -l]
        ok &= sat
    return ok


def brute_status(clauses, atom_count: int, assumptions=(), table=None, mask=None) -> bool:
    """True iff clauses + assumptions are satisfiable."""
    if table is None:
        table = all_assignments(atom_count)
    if mask is None:
        mask = satisfying_mask(clauses, atom_count, table)
    m = mask.copy()
    for a in assumptions:
        m &= table[:, a] if a > 0 else ~table[:, -a]
    return bool(m.any())


def brute_implied(clause, clauses, atom_count: int, assumptions=(), table=None, mask=None) -> bool:
    """True iff every model of clauses + assumptions satisfies ``clause``."""
    if table is None:
        table = all_assignments(atom_count)
    if mask is None:
        mask = satisfying_mask(clauses, atom_count, table)
    m = mask.copy()
    for a in assumptions:
        m &= table[:, a] if a > 0 else ~table[:, -a]
    sat = np.zeros(len(table), dtype=bool)
    for l in clause:
        sat |= table[:, l] if l > 0 else ~table[:, -l]
    return not bool((m & ~sat).any())


def count_models(clauses, atom_count: int, project=None) -> int:
    """Number of models, optionally projected onto the atoms in ``project``."""
    table = all_assignments(atom_count)
    mask = satisfying_mask(clauses, atom_count, table)
    if project is None:
        return int(mask.sum())
    rows = table[mask][:, list(project)]
    return len({r.tobytes() for r in rows})


def qc_satisfiable(n: int, placed) -> bool:
    """Backtracking over rows: can ``placed`` be completed to n queens?"""
    placed = list(placed)
    for i in range(len(placed)):
        for j in range(i + 1, len(placed)):
            if attacks(placed[i], placed[j]):
                return False
    fixed_row = {r: c for r, c in placed}
    if len(fixed_row) != len(placed):
        return False
    cols, d1, d2 = set(), set(), set()

    def free(r, c):
        return c not in cols and (r - c) not in d1 and (r + c) not in d2

    def place(r, c):
        cols.add(c)
        d1.add(r - c)
        d2.add(r + c)

    def unplace(r, c):
        cols.discard(c)
        d1.discard(r - c)
        d2.discard(r + c)

    def go(r):
        if r > n:
            return True
        options = [fixed_row[r]] if r in fixed_row else range(1, n + 1)
        for c in options:
            if free(r, c) and all(
                not attacks((r, c), p) for p in placed if p[0] > r
            ):
                place(r, c)
                if go(r + 1):
                    return True
                unplace(r, c)
        return False

    return go(1)


def pup_satisfiable(instance) -> bool:
    """Backtracking assignment of enabled zones/sensors to units.

    Units are interchangeable, so an element may only open the lowest
    unused unit. Partner links are added lazily whenever a zone and a
    related sensor end up on different units.
    """
    zones = [z for z in instance.zones if z not in instance.disabled_zones]
    sensors = [s for s in instance.sensors if s not in instance.disabled_sensors]
    enabled = set(zones) | set(sensors)
    nbrs = {x: set() for x in enabled}
    for z, s in instance.edges:
        if z in enabled and s in enabled:
            nbrs[z].add(s)
            nbrs[s].add(z)

    # breadth-first order keeps related elements close together
    order, seen = [], set()
    for start in zones + sensors:
        if start in seen:
            continue
        seen.add(start)
        queue = [start]
        while queue:
            x = queue.pop(0)
            order.append(x)
            for y in sorted(nbrs[x]):
                if y not in seen:
                    seen.add(y)
                    queue.append(y)

    n_units = len(instance.units)
    is_zone = set(zones)
    at = {}
    zload = [0] * n_units
    sload = [0] * n_units
    links = [[0] * n_units for _ in range(n_units)]  # reference counts
    degree = [0] * n_units

    def add_link(u, v):
        if links[u][v] == 0:
            if degree[u] >= instance.iucap or degree[v] >= instance.iucap:
                return False
            degree[u] += 1
            degree[v] += 1
        links[u][v] += 1
        links[v][u] += 1
        return True

    def drop_link(u, v):
        links[u][v] -= 1
        links[v][u] -= 1
        if links[u][v] == 0:
            degree[u] -= 1
            degree[v] -= 1

    def go(i, opened):
        if i == len(order):
            return True
        x = order[i]
        load = zload if x in is_zone else sload
        for u in range(min(opened + 1, n_units)):
            if load[u] >= instance.ucap:
                continue
            made = []
            ok = True
            for y in nbrs[x]:
                v = at.get(y)
                if v is not None and v != u:
                    if not add_link(u, v):
                        ok = False
                        break
                    made.append(v)
            if ok:
                at[x] = u
                load[u] += 1
                if go(i + 1, max(opened, u + 1)):
                    return True
                load[u] -= 1
                del at[x]
            for v in made:
                drop_link(u, v)
        return False

    return go(0, 0)
