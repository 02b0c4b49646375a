"""Streaming benchmark generation: fault streams over PUP and QC instances.

Components fail according to a Zipf law over a fixed random ranking, a
cyclic mutation schema decides what happens at each tick, and the restore
mutation fires with a Bernoulli draw.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .encodings import (
    PupInstance,
    QcInstance,
    decode_qc,
    default_unit_count,
    encode_qc,
    queen_atom,
)
from .engine import Engine, EngineConfig, Luby

ALPHA_PRESETS = (0.7, 1.35, 2.2, 3.64)
PUP_SCHEMA = ("m1", "m3", "m2", "m3")
QC_SCHEMA = ("m1", "m2", "m1", "m3")


@dataclass(frozen=True)
class Delta:
    tick: int
    add: frozenset = frozenset()
    remove: frozenset = frozenset()

    def __post_init__(self):
        if self.add & self.remove:
            raise ValueError(f"tick {self.tick}: atoms both added and removed: {sorted(self.add & self.remove)}")

    def to_json(self) -> str:
        return json.dumps({"tick": self.tick, "add": sorted(self.add), "remove": sorted(self.remove)})

    @classmethod
    def from_json(cls, line: str) -> "Delta":
        d = json.loads(line)
        return cls(int(d["tick"]), frozenset(d.get("add", ())), frozenset(d.get("remove", ())))


def write_stream(path, deltas: Iterable[Delta]) -> None:
    with open(path, "w") as fh:
        for d in deltas:
            fh.write(d.to_json() + "\n")


def read_stream(path) -> list:
    with open(path) as fh:
        return [Delta.from_json(line) for line in fh if line.strip()]


class ZipfSampler:
    """Draws items with P(rank i) proportional to 1 / i**alpha.

    The ranking is a random permutation of ``items`` fixed at construction.
    """

    def __init__(self, items: Sequence, alpha: float, rng: np.random.Generator):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if not len(items):
            raise ValueError("cannot sample from an empty item list")
        self.alpha = alpha
        self.rng = rng
        self.ranked_items = [items[i] for i in rng.permutation(len(items))]
        w = 1.0 / np.arange(1, len(items) + 1, dtype=float) ** alpha
        self.probabilities = w / w.sum()
        self._cum = np.cumsum(self.probabilities)

    def sample_rank(self) -> int:
        """0-based rank of the next draw."""
        i = int(np.searchsorted(self._cum, self.rng.random() * self._cum[-1], side="right"))
        return min(i, len(self.ranked_items) - 1)

    def sample_ranks(self, size: int) -> np.ndarray:
        """``size`` 0-based ranks in one vectorized draw."""
        u = self.rng.random(size) * self._cum[-1]
        return np.minimum(np.searchsorted(self._cum, u, side="right"), len(self.ranked_items) - 1)

    def sample(self):
        return self.ranked_items[self.sample_rank()]


def sample_zipf(sampler: ZipfSampler):
    return sampler.sample()


@dataclass
class MutationSchedule:
    schema: tuple
    p_restore: float
    rng: np.random.Generator
    step: int = 0

    def __post_init__(self):
        if not 0 <= self.p_restore <= 1:
            raise ValueError("p_restore must lie in [0, 1]")
        if not self.schema or any(m not in ("m1", "m2", "m3") for m in self.schema):
            raise ValueError(f"bad mutation schema {self.schema!r}")

    def next(self) -> str:
        m = self.schema[self.step % len(self.schema)]
        self.step += 1
        return m

    def restore_fires(self) -> bool:
        return bool(self.rng.random() < self.p_restore)


def parse_schema(text: str) -> tuple:
    return tuple(s.strip() for s in text.split(",") if s.strip())


# ----------------------------------------------------------------------
# PUP


def gen_double_pup(
    row_length: int,
    entrances: bool = False,
    ucap: int = 2,
    iucap: int = 2,
    units: Optional[int] = None,
) -> PupInstance:
    """Two rows of ``row_length`` rooms with a door wherever two rooms meet.

    Each room is a zone covering its doors, giving 2n zones and 3n-2 door
    sensors. ``entrances=True`` adds an entrance at the first room of the
    top row and at the last room of the bottom row, each with its own
    sensor and a zone covering only that sensor; at n = 2 this is the
    six-zone, six-sensor building of the running example.
    """
    n = row_length
    if n < 2:
        raise ValueError("row_length must be >= 2")
    room = {(r, c): f"z{(r - 1) * n + c}" for r in (1, 2) for c in range(1, n + 1)}
    zones = [room[1, c] for c in range(1, n + 1)] + [room[2, c] for c in range(1, n + 1)]
    sensors = []
    edges = []

    def door(a, b):
        s = f"s{len(sensors) + 1}"
        sensors.append(s)
        edges.append((room[a], s))
        edges.append((room[b], s))

    for c in range(1, n + 1):
        door((1, c), (2, c))
        if c < n:
            door((1, c), (1, c + 1))
            door((2, c), (2, c + 1))

    if entrances:
        for name, at in (("e1", (1, 1)), ("e2", (2, n))):
            s, z = f"s{name}", f"z{name}"
            sensors.append(s)
            zones.append(z)
            edges.append((room[at], s))
            edges.append((z, s))

    if units is None:
        units = default_unit_count(len(zones), len(sensors), ucap)
    return PupInstance(
        tuple(zones), tuple(sensors), tuple(edges),
        tuple(f"u{i}" for i in range(1, units + 1)), ucap, iucap,
    )


class PupStream:
    """Stateful PUP fault stream: m1 disables a zone, m2 a sensor, m3 restores."""

    def __init__(self, base: PupInstance, alpha: float = 2.2, p_restore: float = 0.8,
                 schema: Sequence[str] = PUP_SCHEMA, seed: int = 0):
        self.base = base
        self.rng = np.random.default_rng(seed)
        self.zones = ZipfSampler(list(base.zones), alpha, self.rng)
        self.sensors = ZipfSampler(list(base.sensors), alpha, self.rng)
        self.schedule = MutationSchedule(tuple(schema), p_restore, self.rng)
        self.off = set()  # currently true delta atoms
        self.tick = 0

    def _disable(self, sampler: ZipfSampler, kind: str) -> frozenset:
        for _ in range(len(sampler.ranked_items)):
            atom = f"{kind}_off({sampler.sample()})"
            if atom not in self.off:
                self.off.add(atom)
                return frozenset([atom])
        return frozenset()

    def next_delta(self) -> Delta:
        m = self.schedule.next()
        add = remove = frozenset()
        if m == "m1":
            add = self._disable(self.zones, "zone")
        elif m == "m2":
            add = self._disable(self.sensors, "sensor")
        elif self.schedule.restore_fires():
            remove = frozenset(self.off)
            self.off.clear()
        d = Delta(self.tick, add, remove)
        self.tick += 1
        return d

    def current_instance(self) -> PupInstance:
        zs = {a[len("zone_off("):-1] for a in self.off if a.startswith("zone_off(")}
        ss = {a[len("sensor_off("):-1] for a in self.off if a.startswith("sensor_off(")}
        return self.base.with_disabled(zs, ss)


def next_pup_delta(state: PupStream) -> Delta:
    return state.next_delta()


def gen_pup_stream(row_length: int, ticks: int, seed: int = 0, alpha: float = 2.2,
                   p_restore: float = 0.8, schema: Sequence[str] = PUP_SCHEMA, **kw):
    """Base instance and ``ticks`` deltas."""
    if ticks < 1:
        raise ValueError("ticks must be >= 1")
    base = gen_double_pup(row_length, **kw)
    st = PupStream(base, alpha, p_restore, schema, seed)
    return base, [st.next_delta() for _ in range(ticks)]


# ----------------------------------------------------------------------
# QC


def rotate_ccw(cell, n: int):
    r, c = cell
    return (n + 1 - c, r)


def hidden_qc_solution(n: int, seed: int) -> frozenset:
    """A complete n-queens placement found by the engine under a jittered branching order."""
    enc = encode_qc(n)
    eng = Engine(enc.clauses, enc.atom_count, EngineConfig(seed=seed, restart_policy=Luby(64)))
    out = eng.solve([-enc.selectors[queen_atom(r, c)] for r in range(1, n + 1) for c in range(1, n + 1)])
    if not out.is_model:
        raise ValueError(f"no {n}-queens solution exists")
    return decode_qc(out.assignment, n, enc)


class QcStream:
    """Stateful QC stream: m1 rotates the board, m2 reveals a queen, m3 restores."""

    def __init__(self, n: int, alpha: float = 1.35, p_restore: float = 0.95,
                 schema: Sequence[str] = QC_SCHEMA, seed: int = 0):
        if n < 4:
            raise ValueError("n-queens completion streams need n >= 4")
        self.n = n
        self.rng = np.random.default_rng(seed)
        hidden = sorted(hidden_qc_solution(n, seed))
        k = math.floor(0.4 * n)
        picks = self.rng.choice(len(hidden), size=k, replace=False)
        self.initial = frozenset(hidden[i] for i in picks)
        self.initial_hidden = frozenset(hidden)
        self.placed = set(self.initial)
        self.hidden = set(self.initial_hidden)
        self.rotation = 0
        self.columns = ZipfSampler(list(range(1, n + 1)), alpha, self.rng)
        self.schedule = MutationSchedule(tuple(schema), p_restore, self.rng)
        self.tick = 0

    def instance(self) -> QcInstance:
        return QcInstance(self.n, frozenset(self.placed), frozenset(self.hidden), self.rotation % 4)

    def _reveal(self) -> None:
        if self.placed >= self.hidden:
            return
        by_col = {c: (r, c) for r, c in self.hidden}
        for _ in range(self.n):
            q = by_col[self.columns.sample()]
            if q not in self.placed:
                self.placed.add(q)
                return

    def next_delta(self) -> Delta:
        before = set(self.placed)
        m = self.schedule.next()
        if m == "m1":
            self.placed = {rotate_ccw(q, self.n) for q in self.placed}
            self.hidden = {rotate_ccw(q, self.n) for q in self.hidden}
            self.rotation += 1
        elif m == "m2":
            self._reveal()
        elif self.schedule.restore_fires():
            self.placed = set(self.initial)
            self.hidden = set(self.initial_hidden)
            self.rotation = 0
        d = Delta(
            self.tick,
            frozenset(queen_atom(*q) for q in self.placed - before),
            frozenset(queen_atom(*q) for q in before - self.placed),
        )
        self.tick += 1
        return d


def gen_qc_stream(n: int, ticks: int, seed: int = 0, alpha: float = 1.35,
                  p_restore: float = 0.95, schema: Sequence[str] = QC_SCHEMA):
    """Initial instance (with its hidden witness) and ``ticks`` deltas."""
    if ticks < 1:
        raise ValueError("ticks must be >= 1")
    st = QcStream(n, alpha, p_restore, schema, seed)
    inst = QcInstance(n, st.initial, st.initial_hidden, 0)
    return inst, [st.next_delta() for _ in range(ticks)]


def initial_true_atoms(instance) -> frozenset:
    """Delta atoms that hold before the first tick."""
    if isinstance(instance, QcInstance):
        return frozenset(queen_atom(*q) for q in instance.placed)
    return frozenset()
