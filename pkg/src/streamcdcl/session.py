"""One stream, one solver: assumptions, cache partitioning, solve, rewards.

Four strategies are supported:

``MRestart``  a fresh engine per tick, nothing carried over.
``RL``        persistent engine with phase saving plus the bandit cache.
``PSOnly``    persistent engine with phase saving; every cached clause stays frozen.
``COnly``     bandit cache but no phase saving.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .cache import BanditPolicy, ConstraintCache, Partition, select_for_tick, update_weights
from .engine import INCOHERENT, MODEL, TIMEOUT, Engine, EngineConfig, SolveOutcome


class UnknownAtom(KeyError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: str  # "mrestart" | "rl" | "ps" | "c"
    policy: Optional[BanditPolicy] = None

    def __post_init__(self):
        if self.kind not in ("mrestart", "rl", "ps", "c"):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind != "mrestart" and self.policy is None:
            object.__setattr__(self, "policy", BanditPolicy())
        if self.kind == "ps":
            object.__setattr__(self, "policy", replace(self.policy, k=0))

    @property
    def lam(self) -> Optional[float]:
        return None if self.policy is None else self.policy.lam


def MRestart() -> Strategy:
    return Strategy("mrestart")


def RL(policy: BanditPolicy = BanditPolicy()) -> Strategy:
    return Strategy("rl", policy)


def PSOnly(policy: BanditPolicy = BanditPolicy()) -> Strategy:
    return Strategy("ps", policy)


def COnly(policy: BanditPolicy = BanditPolicy()) -> Strategy:
    return Strategy("c", policy)


class AssumptionState:
    """Truth value per delta atom, persistent across ticks."""

    def __init__(self, selectors: Mapping[str, int], initial_true: Iterable[str] = ()):
        self.selectors = dict(selectors)
        self._order = sorted(self.selectors)
        self.truth = {a: False for a in self._order}
        for a in initial_true:
            self._check(a)
            self.truth[a] = True

    def _check(self, atom):
        if atom not in self.selectors:
            raise UnknownAtom(atom)

    def true_atoms(self) -> frozenset:
        return frozenset(a for a, v in self.truth.items() if v)

    def literals(self) -> list:
        """Assumption literals: the selector literal for true atoms, its negation otherwise."""
        sel = self.selectors
        return [sel[a] if self.truth[a] else -sel[a] for a in self._order]


def update_assumptions(delta, state: AssumptionState) -> list:
    for a in delta.add:
        state._check(a)
    for a in delta.remove:
        state._check(a)
    for a in delta.add:
        state.truth[a] = True
    for a in delta.remove:
        state.truth[a] = False
    return state.literals()


@dataclass
class TickResult:
    tick: int
    status: str
    wall_time: float
    conflicts: int
    decisions: int
    active: int
    frozen: int
    deleted: int
    new_learned: int
    true_atoms: Optional[frozenset] = None
    assignment: Optional[tuple] = field(default=None, repr=False)
    build_time: float = 0.0  # engine construction inside wall_time (mrestart only)

    def __post_init__(self):
        if self.wall_time < 0:
            raise ValueError("negative wall time")


class Session:
    def __init__(self, clauses, atom_count: int, selectors: Mapping[str, int], strategy: Strategy,
                 seed: Optional[int] = None, initial_true: Iterable[str] = (),
                 engine_config: Optional[EngineConfig] = None, timeout: Optional[float] = None):
        self.clauses = list(clauses)
        self.atom_count = atom_count
        self.strategy = strategy
        self.timeout = timeout
        cfg = engine_config or EngineConfig(seed=seed)
        if strategy.kind in ("mrestart", "c"):
            cfg = replace(cfg, phase_saving=False) if strategy.kind == "c" else cfg
        self.engine_config = cfg
        self.state = AssumptionState(selectors, initial_true)
        self.cache = ConstraintCache(strategy.policy) if strategy.policy else None
        t0 = time.perf_counter()
        self.engine = Engine(self.clauses, atom_count, cfg)
        self.build_time = time.perf_counter() - t0
        self.program = self.engine.program
        self.tick = 0
        self.last_partition: Optional[Partition] = None
        self.last_outcome: Optional[SolveOutcome] = None

    def process_tick(self, delta) -> TickResult:
        assumptions = update_assumptions(delta, self.state)
        deadline = None
        built = 0.0
        if self.strategy.kind == "mrestart":
            # a new solver instance per tick; the encoding itself is reused
            t0 = time.perf_counter()
            if self.timeout is not None:
                deadline = t0 + self.timeout
            self.engine = Engine(self.program, self.atom_count, self.engine_config, canonical=True)
            built = time.perf_counter() - t0
            out = self.engine.solve(assumptions, deadline=deadline)
            wall = time.perf_counter() - t0
            part = None
            active = frozen = deleted = 0
        else:
            part = select_for_tick(self.cache)
            active_pairs = [(e.key, e.clause) for e in part.active]
            frozen_keys = part.frozen_keys
            if self.timeout is not None:
                deadline = time.perf_counter() + self.timeout
            t0 = time.perf_counter()
            out = self.engine.solve(assumptions, active_pairs, frozen_keys, deadline=deadline)
            wall = time.perf_counter() - t0
            update_weights(self.cache, out, self.cache.policy, self.tick, part)
            active, frozen, deleted = len(part.active), len(part.frozen), len(part.deleted)
        self.last_partition = part
        self.last_outcome = out
        res = TickResult(
            delta.tick, out.status, wall, out.stats.conflicts, out.stats.decisions,
            active, frozen, deleted, len(out.new_learned),
            self.state.true_atoms(), out.assignment, built,
        )
        self.tick += 1
        return res


def open_session(program, strategy: Strategy, seed: Optional[int] = None, **kw) -> Session:
    """``program`` is an encoding-like object with clauses, atom_count and selectors."""
    return Session(program.clauses, program.atom_count, program.selectors, strategy, seed, **kw)


def process_tick(session: Session, delta) -> TickResult:
    return session.process_tick(delta)
