"""Solution checkers written directly against the problem definitions.

Nothing here touches the clause encodings.
"""
from __future__ import annotations

from collections import defaultdict


def check_pup(instance, solution) -> bool:
    """True iff ``solution`` solves ``instance`` over its enabled zones and sensors.

    Edges of disabled zones/sensors are ignored; they are not part of the
    current instance.
    """
    zones = set(instance.zones) - set(instance.disabled_zones)
    sensors = set(instance.sensors) - set(instance.disabled_sensors)
    units = set(instance.units)

    unit_of = defaultdict(set)
    partners = defaultdict(set)
    for a, b in solution.edges:
        if a in units and b in units:
            if a == b:
                return False
            partners[a].add(b)
            partners[b].add(a)
        elif b in units and (a in zones or a in sensors):
            unit_of[a].add(b)
        elif b in units and (a in instance.disabled_zones or a in instance.disabled_sensors):
            continue
        else:
            return False

    for x in zones | sensors:
        if len(unit_of[x]) != 1:
            return False

    zone_load = defaultdict(int)
    sensor_load = defaultdict(int)
    for z in zones:
        zone_load[next(iter(unit_of[z]))] += 1
    for s in sensors:
        sensor_load[next(iter(unit_of[s]))] += 1
    if any(v > instance.ucap for v in zone_load.values()):
        return False
    if any(v > instance.ucap for v in sensor_load.values()):
        return False
    if any(len(p) > instance.iucap for p in partners.values()):
        return False

    for z, s in instance.edges:
        if z not in zones or s not in sensors:
            continue
        (u,) = unit_of[z]
        (v,) = unit_of[s]
        if u != v and v not in partners[u]:
            return False
    return True


def attacks(a, b) -> bool:
    (r1, c1), (r2, c2) = a, b
    return r1 == r2 or c1 == c2 or abs(r1 - r2) == abs(c1 - c2)


def check_qc(n: int, queens, placed=()) -> bool:
    """Exactly n pairwise non-attacking queens on the board, covering ``placed``."""
    queens = list(queens)
    if len(queens) != n or len(set(queens)) != n:
        return False
    for r, c in queens:
        if not (1 <= r <= n and 1 <= c <= n):
            return False
    for i in range(n):
        for j in range(i + 1, n):
            if attacks(queens[i], queens[j]):
                return False
    return set(placed) <= set(queens)
