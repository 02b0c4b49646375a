"""Propositional encodings of the two benchmark problems.

Every component that a stream can switch on or off gets a selector atom,
so the whole family of instances a stream can produce is covered by one
clause set built up front. Reconfiguration then only flips assumptions.

Atom naming: ``zu_<z>_<u>``, ``su_<s>_<u>``, ``uu_<u>_<v>``, ``on_<z>``,
``on_<s>``, ``q_<r>_<c>``, ``queen_<r>_<c>``; counter auxiliaries are
``aux<N>``. Delta atoms (what streams mention) are ``zone_off(<z>)``,
``sensor_off(<s>)`` and ``queen(<r>,<c>)``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable


class CnfBuilder:
    """Allocates named atoms and collects clauses."""

    def __init__(self):
        self.clauses = []
        self.names = {}  # name -> atom
        self.symbols = {}  # atom -> name
        self._aux = 0

    @property
    def atom_count(self) -> int:
        return len(self.symbols)

    def atom(self, name: str) -> int:
        a = self.names.get(name)
        if a is None:
            a = len(self.symbols) + 1
            self.names[name] = a
            self.symbols[a] = name
        return a

    def aux(self) -> int:
        self._aux += 1
        return self.atom(f"aux{self._aux}")

    def add(self, clause: Iterable[int]) -> None:
        self.clauses.append(list(clause))

    def at_most_one(self, xs) -> None:
        for a, b in itertools.combinations(xs, 2):
            self.add([-a, -b])

    def at_most_k(self, xs, k: int) -> None:
        """Sequential counter; k = 1 falls back to pairwise."""
        xs = list(xs)
        n = len(xs)
        if n <= k:
            return
        if k == 0:
            for x in xs:
                self.add([-x])
            return
        if k == 1:
            self.at_most_one(xs)
            return
        s = [[self.aux() for _ in range(k)] for _ in range(n - 1)]
        self.add([-xs[0], s[0][0]])
        for j in range(1, k):
            self.add([-s[0][j]])
        for i in range(1, n - 1):
            self.add([-xs[i], s[i][0]])
            self.add([-s[i - 1][0], s[i][0]])
            for j in range(1, k):
                self.add([-xs[i], -s[i - 1][j - 1], s[i][j]])
                self.add([-s[i - 1][j], s[i][j]])
            self.add([-xs[i], -s[i - 1][k - 1]])
        self.add([-xs[n - 1], -s[n - 2][k - 1]])


@dataclass
class Encoding:
    clauses: list
    atom_count: int
    selectors: dict  # delta atom name -> solver literal made true by the atom
    symbols: dict  # atom -> name
    names: dict  # name -> atom

    def atom(self, name: str) -> int:
        return self.names[name]


# ----------------------------------------------------------------------
# Partner Unit Problem


@dataclass(frozen=True)
class PupInstance:
    zones: tuple
    sensors: tuple
    edges: tuple  # (zone, sensor) pairs
    units: tuple
    ucap: int = 2
    iucap: int = 2
    disabled_zones: frozenset = frozenset()
    disabled_sensors: frozenset = frozenset()

    def __post_init__(self):
        zs, ss = set(self.zones), set(self.sensors)
        for z, s in self.edges:
            if z not in zs or s not in ss:
                raise ValueError(f"edge ({z}, {s}) references an unknown zone or sensor")
        if not self.units:
            raise ValueError("a PUP instance needs at least one unit")

    def with_disabled(self, zones=(), sensors=()) -> "PupInstance":
        return replace(self, disabled_zones=frozenset(zones), disabled_sensors=frozenset(sensors))

    def to_json(self) -> dict:
        return {
            "zones": list(self.zones),
            "sensors": list(self.sensors),
            "edges": [list(e) for e in self.edges],
            "ucap": self.ucap,
            "iucap": self.iucap,
            "units": list(self.units),
        }

    @classmethod
    def from_json(cls, d: dict) -> "PupInstance":
        units = d["units"]
        if isinstance(units, int):
            units = [f"u{i}" for i in range(1, units + 1)]
        return cls(
            tuple(d["zones"]), tuple(d["sensors"]), tuple(tuple(e) for e in d["edges"]),
            tuple(units), d["ucap"], d["iucap"],
        )


def default_unit_count(n_zones: int, n_sensors: int, ucap: int) -> int:
    """Port lower bound ceil(max(|Z|, |S|) / ucap) with 20% slack, rounded up."""
    return math.ceil(1.2 * math.ceil(max(n_zones, n_sensors) / ucap))


@dataclass(frozen=True)
class PupSolution:
    edges: frozenset  # (zone|sensor, unit) and (unit, unit) pairs


def encode_pup(instance: PupInstance, symmetry_breaking: bool = False) -> Encoding:
    b = CnfBuilder()
    U = instance.units
    zu = {(z, u): b.atom(f"zu_{z}_{u}") for z in instance.zones for u in U}
    su = {(s, u): b.atom(f"su_{s}_{u}") for s in instance.sensors for u in U}
    uu = {}
    for i, j in itertools.combinations(range(len(U)), 2):
        uu[U[i], U[j]] = uu[U[j], U[i]] = b.atom(f"uu_{U[i]}_{U[j]}")
    on = {}
    for x in (*instance.zones, *instance.sensors):
        on[x] = b.atom(f"on_{x}")

    def element(x, var):
        b.add([-on[x]] + [var[x, u] for u in U])
        b.at_most_one([var[x, u] for u in U])
        for u in U:
            b.add([on[x], -var[x, u]])

    for z in instance.zones:
        element(z, zu)
    for s in instance.sensors:
        element(s, su)

    for u in U:
        b.at_most_k([zu[z, u] for z in instance.zones], instance.ucap)
        b.at_most_k([su[s, u] for s in instance.sensors], instance.ucap)
        b.at_most_k([uu[u, v] for v in U if v != u], instance.iucap)

    for z, s in instance.edges:
        for u in U:
            for v in U:
                if u != v:
                    b.add([-zu[z, u], -su[s, v], uu[u, v]])

    if symmetry_breaking:
        used = {u: b.atom(f"used_{u}") for u in U}
        for u in U:
            members = [zu[z, u] for z in instance.zones] + [su[s, u] for s in instance.sensors]
            for m in members:
                b.add([-m, used[u]])
            b.add([-used[u]] + members)
        for prev, u in zip(U, U[1:]):
            b.add([-used[u], used[prev]])

    selectors = {}
    for z in instance.zones:
        selectors[f"zone_off({z})"] = -on[z]
    for s in instance.sensors:
        selectors[f"sensor_off({s})"] = -on[s]
    return Encoding(b.clauses, b.atom_count, selectors, b.symbols, b.names)


def decode_pup(model, instance: PupInstance, enc: Encoding) -> PupSolution:
    """``model`` is an indexable truth vector over atoms (index 0 unused)."""
    H = set()
    for u in instance.units:
        for z in instance.zones:
            if model[enc.names[f"zu_{z}_{u}"]]:
                H.add((z, u))
        for s in instance.sensors:
            if model[enc.names[f"su_{s}_{u}"]]:
                H.add((s, u))
    for u, v in itertools.combinations(instance.units, 2):
        if model[enc.names[f"uu_{u}_{v}"]]:
            H.add((u, v))
    return PupSolution(frozenset(H))


def pup_instance_from_state(base: PupInstance, true_atoms: Iterable[str]) -> PupInstance:
    """Apply the set of currently true delta atoms to the base instance."""
    zones, sensors = set(), set()
    for name in true_atoms:
        if name.startswith("zone_off("):
            zones.add(name[len("zone_off("):-1])
        elif name.startswith("sensor_off("):
            sensors.add(name[len("sensor_off("):-1])
    return base.with_disabled(zones, sensors)


# ----------------------------------------------------------------------
# n-Queens Completion


@dataclass(frozen=True)
class QcInstance:
    n: int
    placed: frozenset  # 1-based (row, col)
    hidden_solution: frozenset = frozenset()
    rotation_count: int = 0

    def to_json(self) -> dict:
        return {"n": self.n, "placed": sorted(list(p) for p in self.placed)}

    @classmethod
    def from_json(cls, d: dict) -> "QcInstance":
        return cls(d["n"], frozenset(tuple(p) for p in d["placed"]))


def queen_atom(r: int, c: int) -> str:
    return f"queen({r},{c})"


def parse_queen_atom(name: str):
    r, c = name[len("queen("):-1].split(",")
    return int(r), int(c)


def encode_qc(n: int) -> Encoding:
    if n < 1:
        raise ValueError("board size must be positive")
    b = CnfBuilder()
    q = {(r, c): b.atom(f"q_{r}_{c}") for r in range(1, n + 1) for c in range(1, n + 1)}
    sel = {(r, c): b.atom(f"queen_{r}_{c}") for r in range(1, n + 1) for c in range(1, n + 1)}
    for r in range(1, n + 1):
        row = [q[r, c] for c in range(1, n + 1)]
        b.add(row)
        b.at_most_one(row)
    for c in range(1, n + 1):
        b.at_most_one([q[r, c] for r in range(1, n + 1)])
    for d in range(-(n - 1), n):
        b.at_most_one([q[r, r - d] for r in range(1, n + 1) if 1 <= r - d <= n])
    for s in range(2, 2 * n + 1):
        b.at_most_one([q[r, s - r] for r in range(1, n + 1) if 1 <= s - r <= n])
    for rc in q:
        b.add([-sel[rc], q[rc]])
    selectors = {queen_atom(r, c): sel[r, c] for (r, c) in sel}
    return Encoding(b.clauses, b.atom_count, selectors, b.symbols, b.names)


def decode_qc(model, n: int, enc: Encoding) -> frozenset:
    return frozenset(
        (r, c) for r in range(1, n + 1) for c in range(1, n + 1) if model[enc.names[f"q_{r}_{c}"]]
    )


def write_instance(path, instance) -> None:
    Path(path).write_text(json.dumps(instance.to_json(), indent=1) + "\n")


def read_instance(path):
    d = json.loads(Path(path).read_text())
    if "n" in d:
        return QcInstance.from_json(d)
    return PupInstance.from_json(d)
