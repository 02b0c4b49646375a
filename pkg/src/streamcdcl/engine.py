"""Conflict-driven clause learning engine with assumptions and phase saving.

The engine keeps the program clauses loaded once and is called repeatedly
with different assumption vectors and different sets of externally managed
("supplied") constraints. Supplied constraints and clauses learned during a
call are attached only for that call; the caller decides what survives.
"""
from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .clause import Clause, ClauseKey, Tautology, canonicalize, clause_key

MODEL = "model"
INCOHERENT = "incoherent"
TIMEOUT = "timeout"


class OutOfRange(ValueError):
    """A clause mentions an atom beyond the declared atom count."""


@dataclass(frozen=True)
class Luby:
    unit: int = 64

    def __post_init__(self):
        if self.unit < 1:
            raise ValueError("luby unit must be >= 1")

    def limits(self):
        i = 1
        while True:
            yield self.unit * luby(i)
            i += 1


@dataclass(frozen=True)
class Geometric:
    base: int = 100
    factor: float = 1.5

    def __post_init__(self):
        if self.base < 1 or self.factor < 1:
            raise ValueError("geometric restarts need base >= 1 and factor >= 1")

    def limits(self):
        x = float(self.base)
        while True:
            yield int(x)
            x *= self.factor


@dataclass(frozen=True)
class LbdHalving:
    interval: int = 2000

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError("deletion interval must be >= 1")


@dataclass(frozen=True)
class EngineConfig:
    restart_policy: Optional[Union[Luby, Geometric]] = Luby(64)
    in_call_deletion: Optional[LbdHalving] = LbdHalving(2000)
    phase_saving: bool = True
    var_decay: float = 0.95
    # None keeps branching fully deterministic (lowest atom wins ties);
    # an integer jitters the initial activities to diversify models.
    seed: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.var_decay < 1:
            raise ValueError("var_decay must lie in (0, 1)")


def luby(i: int) -> int:
    """i-th element (1-based) of the Luby sequence 1,1,2,1,1,2,4,..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


@dataclass(frozen=True)
class LearnedClause:
    key: ClauseKey
    clause: Clause
    lbd: int


@dataclass
class Usage:
    used: bool = False
    # refreshed LBD if the constraint took part in conflict analysis, else None
    lbd: Optional[int] = None


@dataclass
class SolveStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    restarts: int = 0
    wall_time: float = 0.0


@dataclass
class SolveOutcome:
    status: str
    assignment: Optional[tuple] = None
    new_learned: list = field(default_factory=list)
    usage_report: dict = field(default_factory=dict)
    rediscovery_report: set = field(default_factory=set)
    stats: SolveStats = field(default_factory=SolveStats)
    rediscovery_lbd: dict = field(default_factory=dict)  # key -> LBD at its latest rediscovery

    @property
    def is_model(self) -> bool:
        return self.status == MODEL

    def value(self, lit: int) -> bool:
        v = self.assignment[abs(lit)]
        return v if lit > 0 else not v

    def true_atoms(self) -> set:
        return {v for v, b in enumerate(self.assignment) if v and b}


class _Clause:
    __slots__ = ("lits", "learnt", "lbd", "key", "used", "permanent")

    def __init__(self, lits, learnt=False, lbd=0, key=None, permanent=False):
        self.lits = lits
        self.learnt = learnt
        self.lbd = lbd
        self.key = key
        self.used = False
        self.permanent = permanent


def _idx(lit: int) -> int:
    return (lit << 1) if lit > 0 else ((-lit) << 1) | 1


def _lit(idx: int) -> int:
    return -(idx >> 1) if idx & 1 else idx >> 1


def _as_clause(idx_lits) -> Clause:
    # p ^ 1 orders an atom's negative literal before its positive one
    return Clause(tuple(_lit(q ^ 1) for q in sorted(p ^ 1 for p in idx_lits)))


class Engine:
    """CDCL engine over a fixed program.

    >>> e = Engine([[1, 2], [-1]], 2)
    >>> e.solve([]).true_atoms()
    {2}
    """

    def __init__(self, clauses: Iterable, atom_count: int, config: EngineConfig = EngineConfig(),
                 canonical: bool = False):
        if atom_count < 0:
            raise ValueError("atom_count must be non-negative")
        self.config = config
        self.n = n = atom_count
        self._vals = [0] * (2 * n + 2)  # per literal index: 1 true, -1 false, 0 unassigned
        self._level = [0] * (n + 1)
        self._reason = [None] * (n + 1)
        self._seen = [False] * (n + 1)
        self._activity = [0.0] * (n + 1)
        self._var_inc = 1.0
        # long clauses: watches[l] holds [clause, blocker] pairs for clauses watching l
        self._watches = [[] for _ in range(2 * n + 2)]
        # binary clauses: bins[l] holds (other literal, clause) pairs
        self._bins = [[] for _ in range(2 * n + 2)]
        self._trail = []
        self._trail_lim = []
        self._qhead = 0
        self._heap = []
        self._in_heap = [None] * (n + 1)  # activity of the live heap entry per atom
        # saved polarity per atom: None (never assigned), True, False
        self.phases = [None] * (n + 1)
        self._units = []
        self._idx_memo = {}  # clause key -> internal literal tuple
        self._program_empty = False
        self.program = []
        self._stats = SolveStats()
        self._refreshed = {}
        self._temps = []
        self._learnts = []
        self._deleted = 0
        # supplied constraints stay attached between calls while they remain active
        self._supplied = {}

        if config.seed is not None:
            rng = random.Random(config.seed)
            self._activity = [rng.random() * 1e-3 for _ in range(n + 1)]

        if canonical:
            # trusted input: Clause objects that went through canonicalize()
            self.program = list(clauses)
            attach = self._attach
            for c in self.program:
                if not c.lits:
                    self._program_empty = True
                    continue
                ic = _Clause([(l << 1) if l > 0 else ((-l) << 1) | 1 for l in c.lits], permanent=True)
                if len(ic.lits) == 1:
                    self._units.append(ic)
                else:
                    attach(ic)
            clauses = ()

        for raw in clauses:
            lits = raw.lits if isinstance(raw, Clause) else tuple(int(l) for l in raw)
            for l in lits:
                if l == 0 or abs(l) > n:
                    raise OutOfRange(f"literal {l} outside atoms 1..{n}")
            if not lits:
                self._program_empty = True
                continue
            c = canonicalize(lits)
            if c is Tautology:
                continue
            self.program.append(c)
            ic = _Clause([_idx(l) for l in c.lits], permanent=True)
            if len(ic.lits) == 1:
                self._units.append(ic)
            else:
                self._attach(ic)
        self._rebuild_heap()

    # ------------------------------------------------------------------
    # trail primitives

    @property
    def decision_level(self) -> int:
        return len(self._trail_lim)

    def value(self, lit: int) -> Optional[bool]:
        v = self._vals[_idx(lit)]
        return None if v == 0 else v > 0

    def _enqueue(self, p: int, reason) -> None:
        vals = self._vals
        vals[p] = 1
        vals[p ^ 1] = -1
        v = p >> 1
        self._level[v] = len(self._trail_lim)
        self._reason[v] = reason
        self._trail.append(p)

    def _new_level(self) -> None:
        self._trail_lim.append(len(self._trail))

    def _backtrack(self, level: int) -> None:
        if len(self._trail_lim) <= level:
            return
        trail = self._trail
        vals = self._vals
        reason = self._reason
        phases = self.phases
        heap = self._heap
        act = self._activity
        inh = self._in_heap
        push = heapq.heappush
        stop = self._trail_lim[level]
        for i in range(len(trail) - 1, stop - 1, -1):
            p = trail[i]
            v = p >> 1
            vals[p] = 0
            vals[p ^ 1] = 0
            reason[v] = None
            phases[v] = not (p & 1)
            a = act[v]
            if inh[v] != a:
                inh[v] = a
                push(heap, (-a, v))
        del trail[stop:]
        del self._trail_lim[level:]
        self._qhead = len(trail)

    # stepping by hand (tests, demos); solve() discards whatever this leaves behind

    def decide(self, lit: int):
        """Open a decision level for ``lit`` and propagate; returns the conflict clause or None."""
        if self._supplied:
            self._drop_supplied(list(self._supplied))
        if not self._trail_lim and self._qhead == 0:
            for c in self._units:
                if self._vals[c.lits[0]] == -1:
                    return c
                if self._vals[c.lits[0]] == 0:
                    self._enqueue(c.lits[0], c)
            confl = self._propagate()
            if confl is not None:
                return confl
        p = _idx(lit)
        if self._vals[p] != 0:
            raise ValueError(f"literal {lit} is already assigned")
        self._new_level()
        self._enqueue(p, None)
        return self._propagate()

    def trail(self) -> list:
        """(signed literal, decision level, is_decision) in assignment order."""
        return [(_lit(p), self._level[p >> 1], self._reason[p >> 1] is None) for p in self._trail]

    def reset(self) -> None:
        self._clear()
        self._rebuild_heap()

    def _clear(self) -> None:
        """Unassign everything, including level-0 facts."""
        self._backtrack(0)
        for p in self._trail:
            v = p >> 1
            self._vals[p] = 0
            self._vals[p ^ 1] = 0
            self._reason[v] = None
            self.phases[v] = not (p & 1)
        self._trail.clear()
        self._qhead = 0

    # ------------------------------------------------------------------
    # propagation

    def _propagate(self):
        trail = self._trail
        vals = self._vals
        watches = self._watches
        bins = self._bins
        level = self._level
        reason = self._reason
        lvl = len(self._trail_lim)
        qhead = self._qhead
        start = qhead
        confl = None
        while qhead < len(trail):
            false_lit = trail[qhead] ^ 1
            qhead += 1
            for other, c in bins[false_lit]:
                vo = vals[other]
                if vo == 1:
                    continue
                if vo == -1:
                    confl = c
                    break
                vals[other] = 1
                vals[other ^ 1] = -1
                v = other >> 1
                level[v] = lvl
                reason[v] = c
                lits = c.lits
                lits[0] = other
                lits[1] = false_lit
                c.used = True
                trail.append(other)
            if confl is not None:
                break
            ws = watches[false_lit]
            i = j = 0
            nw = len(ws)
            while i < nw:
                w = ws[i]
                i += 1
                if vals[w[1]] == 1:
                    ws[j] = w
                    j += 1
                    continue
                c = w[0]
                lits = c.lits
                first = lits[0]
                if first == false_lit:
                    first = lits[1]
                    lits[0] = first
                    lits[1] = false_lit
                if first != w[1] and vals[first] == 1:
                    w[1] = first
                    ws[j] = w
                    j += 1
                    continue
                for k in range(2, len(lits)):
                    lk = lits[k]
                    if vals[lk] != -1:
                        lits[1] = lk
                        lits[k] = false_lit
                        w[1] = first
                        watches[lk].append(w)
                        break
                else:
                    ws[j] = w
                    j += 1
                    if vals[first] == -1:
                        confl = c
                        while i < nw:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                    else:
                        vals[first] = 1
                        vals[first ^ 1] = -1
                        v = first >> 1
                        level[v] = lvl
                        reason[v] = c
                        c.used = True
                        trail.append(first)
            del ws[j:]
            if confl is not None:
                break
        self._stats.propagations += len(trail) - start
        self._qhead = len(trail) if confl is not None else qhead
        return confl

    # ------------------------------------------------------------------
    # branching

    def _bump(self, v: int) -> None:
        act = self._activity
        act[v] += self._var_inc
        if act[v] > 1e100:
            for u in range(1, self.n + 1):
                act[u] *= 1e-100
            self._var_inc *= 1e-100
            self._rebuild_heap()
        elif self._vals[v << 1] == 0:
            self._in_heap[v] = act[v]
            heapq.heappush(self._heap, (-act[v], v))

    def _rebuild_heap(self) -> None:
        vals = self._vals
        act = self._activity
        inh = self._in_heap = [None] * (self.n + 1)
        self._heap = [(-act[v], v) for v in range(1, self.n + 1) if vals[v << 1] == 0]
        for _, v in self._heap:
            inh[v] = act[v]
        heapq.heapify(self._heap)

    def choose_literal(self) -> Optional[int]:
        """Unassigned atom of maximal activity (lowest id on ties) with its polarity.

        Returns a signed literal, or None if every atom is assigned.
        """
        heap = self._heap
        if len(heap) > 4 * self.n + 1024:
            self._rebuild_heap()
            heap = self._heap
        vals = self._vals
        act = self._activity
        inh = self._in_heap
        pop = heapq.heappop
        while heap:
            neg, v = pop(heap)
            if -neg != act[v]:
                continue  # stale entry
            inh[v] = None
            if vals[v << 1] == 0:
                break
        else:
            return None
        saved = self.phases[v]
        if self.config.phase_saving and saved is not None:
            return v if saved else -v
        return -v

    # ------------------------------------------------------------------
    # conflict analysis

    def _touch_supplied(self, c: _Clause) -> None:
        """Record participation of a supplied constraint in conflict analysis."""
        c.used = True
        level = self._level
        c.lbd = len({level[p >> 1] for p in c.lits})
        self._refreshed[c.key] = c.lbd

    def analyze_conflict(self, confl):
        """First-UIP learning on the current trail: (learned Clause, lbd, backjump level)."""
        if len(self._trail_lim) == 0:
            raise ValueError("conflict analysis needs decision level >= 1")
        lits, lbd, bj = self._analyze(confl)
        return _as_clause(lits), lbd, bj

    def _analyze(self, confl):
        """First-UIP learning. Returns (learned literal indices, lbd, backjump level).

        The asserting literal is placed first, the literal of the backjump
        level second.
        """
        seen = self._seen
        level = self._level
        reason = self._reason
        trail = self._trail
        dl = len(self._trail_lim)
        learnt = [0]
        path = 0
        p = -1
        idx = len(trail) - 1
        c = confl
        while True:
            if c.key is not None and not c.learnt:
                self._touch_supplied(c)
            lits = c.lits
            for q in (lits if p == -1 else lits[1:]):
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump(v)
                    seen[v] = True
                    if level[v] >= dl:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            v = p >> 1
            c = reason[v]
            seen[v] = False
            path -= 1
            if path <= 0:
                break
        learnt[0] = p ^ 1
        for q in learnt:
            seen[q >> 1] = False
        if len(learnt) == 1:
            bj = 0
        else:
            best = 1
            for i in range(2, len(learnt)):
                if level[learnt[i] >> 1] > level[learnt[best] >> 1]:
                    best = i
            learnt[1], learnt[best] = learnt[best], learnt[1]
            bj = level[learnt[1] >> 1]
        lbd = len({level[q >> 1] for q in learnt})
        return learnt, lbd, bj

    # ------------------------------------------------------------------
    # clause database

    def _attach(self, c: _Clause) -> None:
        a, b = c.lits[0], c.lits[1]
        if len(c.lits) == 2:
            self._bins[a].append((b, c))
            self._bins[b].append((a, c))
        else:
            # watching a and b; each watcher's blocker is the other watched literal
            self._watches[a].append([c, b])
            self._watches[b].append([c, a])

    def _detach_where(self, lit_sets, keep) -> None:
        """Drop watchers of the given literals whose clause fails ``keep``."""
        bin_lits, long_lits = lit_sets
        bins, watches = self._bins, self._watches
        for l in bin_lits:
            bins[l] = [e for e in bins[l] if keep(e[1])]
        for l in long_lits:
            watches[l] = [w for w in watches[l] if keep(w[0])]

    @staticmethod
    def _watched_lits(clauses):
        bin_lits, long_lits = set(), set()
        for c in clauses:
            if len(c.lits) == 2:
                bin_lits.update(c.lits)
            elif len(c.lits) > 2:
                long_lits.add(c.lits[0])
                long_lits.add(c.lits[1])
        return bin_lits, long_lits

    def _locked(self, c: _Clause) -> bool:
        p = c.lits[0]
        return self._vals[p] == 1 and self._reason[p >> 1] is c

    def _reduce_db(self) -> None:
        learnts = self._learnts
        # highest LBD first, longer first on ties
        order = sorted(learnts, key=lambda c: (c.lbd, len(c.lits)), reverse=True)
        target = len(order) // 2
        removed = set()
        for c in order:
            if len(removed) >= target:
                break
            if len(c.lits) > 2 and not self._locked(c):
                removed.add(id(c))
        if not removed:
            return
        gone = [c for c in learnts if id(c) in removed]
        self._detach_where(self._watched_lits(gone), lambda c: id(c) not in removed)
        self._learnts = [c for c in learnts if id(c) not in removed]
        self._deleted += len(removed)

    def _detach_temporaries(self) -> None:
        # only this call's learned clauses; supplied ones are handled by _sync_supplied
        self._detach_where(self._watched_lits(self._temps), lambda c: not c.learnt)
        self._temps = []
        self._learnts = []

    def _drop_supplied(self, keys) -> None:
        gone = [self._supplied.pop(k) for k in keys]
        gone = [c for c in gone if len(c.lits) > 1]
        if gone:
            ids = {id(c) for c in gone}
            self._detach_where(self._watched_lits(gone), lambda c: id(c) not in ids)

    def _sync_supplied(self, active_constraints) -> list:
        """Make the attached supplied set equal to ``active_constraints``; attach only the difference."""
        current = self._supplied
        memo = self._idx_memo
        wanted = {}
        for key, cl in active_constraints:
            if key in wanted:
                continue
            ic = current.get(key)
            if ic is None:
                il = memo.get(key)
                if il is None:
                    il = memo[key] = tuple(_idx(l) for l in cl.lits)
                ic = _Clause(list(il), key=key)
            ic.used = False
            wanted[key] = ic
        self._drop_supplied([k for k in current if k not in wanted])
        for key, ic in wanted.items():
            if key not in current and len(ic.lits) > 1:
                self._attach(ic)
        self._supplied = wanted
        return list(wanted.values())

    # ------------------------------------------------------------------
    # solve

    def solve(
        self,
        assumptions: Sequence[int] = (),
        active_constraints: Iterable = (),
        frozen_keys=frozenset(),
        deadline: Optional[float] = None,
    ) -> SolveOutcome:
        """Search for a model of program + active constraints under assumptions.

        ``active_constraints`` holds ``(key, Clause)`` pairs. ``deadline`` is
        an absolute ``time.perf_counter()`` value after which the call gives
        up with status ``timeout``.
        """
        t0 = time.perf_counter()
        self._stats = stats = SolveStats()
        self._refreshed = {}
        self._temps = []
        self._learnts = []
        self._deleted = 0
        learned = []  # (key, _Clause, Clause)
        rediscovered = {}
        supplied = []
        self._clear()

        assumption_idx = []
        for a in assumptions:
            a = int(a)
            if a == 0 or abs(a) > self.n:
                raise OutOfRange(f"assumption {a} outside atoms 1..{self.n}")
            assumption_idx.append(_idx(a))
        n_assume = len(assumption_idx)

        def finish(status, assignment=None):
            survivors = {id(c) for c in self._learnts}
            self._clear()
            self._detach_temporaries()
            usage = {}
            for c in supplied:
                usage[c.key] = Usage(c.used, self._refreshed.get(c.key))
            out = []
            keys = set()
            for key, c, canon in learned:
                if id(c) in survivors and key not in keys:
                    keys.add(key)
                    out.append(LearnedClause(key, canon, c.lbd))
            stats.wall_time = time.perf_counter() - t0
            return SolveOutcome(status, assignment, out, usage, set(rediscovered), stats, dict(rediscovered))

        if self._program_empty:
            return finish(INCOHERENT)

        self._rebuild_heap()

        # level-0 facts: program units and supplied constraints
        pending = list(self._units)
        supplied.extend(self._sync_supplied(active_constraints))
        for ic in supplied:
            if len(ic.lits) == 1:
                pending.append(ic)
            elif not ic.lits:
                return finish(INCOHERENT)
        for c in pending:
            p = c.lits[0]
            if self._vals[p] == -1:
                c.used = True
                return finish(INCOHERENT)
            if self._vals[p] == 0:
                c.used = True
                self._enqueue(p, c)

        restart_limits = self.config.restart_policy.limits() if self.config.restart_policy else None
        next_restart = next(restart_limits) if restart_limits else None
        conflicts_since_restart = 0
        deletion = self.config.in_call_deletion
        next_reduce = deletion.interval if deletion else None
        frozen_keys = frozen_keys or frozenset()
        vals = self._vals

        while True:
            confl = self._propagate()
            if confl is not None:
                stats.conflicts += 1
                conflicts_since_restart += 1
                dl = len(self._trail_lim)
                if dl == 0:
                    if confl.key is not None and not confl.learnt:
                        confl.used = True
                    return finish(INCOHERENT)
                lits, lbd, bj = self._analyze(confl)
                canon = _as_clause(lits)
                key = clause_key(canon)
                if key in frozen_keys:
                    rediscovered[key] = lbd
                if key not in self._idx_memo:
                    self._idx_memo[key] = tuple(lits)
                ic = _Clause(lits, learnt=True, lbd=lbd, key=key)
                learned.append((key, ic, canon))
                self._temps.append(ic)
                self._learnts.append(ic)
                self._var_inc /= self.config.var_decay
                if dl <= n_assume:
                    # every decision so far is an assumption
                    return finish(INCOHERENT)
                self._backtrack(bj)
                if len(lits) > 1:
                    self._attach(ic)
                self._enqueue(lits[0], ic)
                if deadline is not None and stats.conflicts % 64 == 0 and time.perf_counter() > deadline:
                    return finish(TIMEOUT)
                continue

            # consistent
            if next_restart is not None and conflicts_since_restart >= next_restart:
                stats.restarts += 1
                conflicts_since_restart = 0
                next_restart = next(restart_limits)
                self._backtrack(0)
                continue
            if next_reduce is not None and stats.conflicts >= next_reduce:
                next_reduce = stats.conflicts + deletion.interval
                self._reduce_db()

            p = None
            while len(self._trail_lim) < n_assume:
                a = assumption_idx[len(self._trail_lim)]
                if vals[a] == 1:
                    self._new_level()
                elif vals[a] == -1:
                    return finish(INCOHERENT)
                else:
                    p = a
                    break
            if p is None:
                lit = self.choose_literal()
                if lit is None:
                    assignment = tuple([False] + [vals[v << 1] == 1 for v in range(1, self.n + 1)])
                    for v in range(1, self.n + 1):
                        self.phases[v] = assignment[v]
                    return finish(MODEL, assignment)
                p = _idx(lit)
                stats.decisions += 1
            self._new_level()
            self._enqueue(p, None)

    # ------------------------------------------------------------------
    # export

    def export_dimacs(self, path, symbols: Optional[Mapping[int, str]] = None) -> None:
        """Write the program as DIMACS CNF; symbols go to ``<path>.sym``."""
        path = Path(path)
        lines = [f"p cnf {self.n} {len(self.program)}"]
        lines += [" ".join(str(l) for l in c.lits) + " 0" for c in self.program]
        path.write_text("\n".join(lines) + "\n")
        if symbols:
            sym = path.with_name(path.name + ".sym")
            sym.write_text("".join(f"{a} {symbols[a]}\n" for a in sorted(symbols)))


def load_program(clauses: Iterable, atom_count: int, config: EngineConfig = EngineConfig()) -> Engine:
    return Engine(clauses, atom_count, config)


def read_dimacs(path):
    """Parse a DIMACS CNF file into (clauses, atom_count)."""
    clauses = []
    n = 0
    cur = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            n = int(line.split()[2])
            continue
        for tok in line.split():
            l = int(tok)
            if l == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(l)
    return clauses, n
