"""Learned-constraint cache managed as a multi-armed bandit with multiple plays.

Each cached clause is an arm with a weight that estimates its reward. Before
every solve the top ``k`` arms by weight are activated, the next ones up to
``n_store`` are kept frozen and everything else is dropped. After the solve
each arm's weight moves towards its observed reward with step ``lam``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Optional

ACTIVE = "active"
FROZEN = "frozen"


class InvalidLBD(ValueError):
    pass


@dataclass(frozen=True)
class BanditPolicy:
    lam: float = 0.5
    w1: float = 40.0
    a: float = 20.0
    k: int = 3000
    n_store: int = 6000

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError("learning rate must lie in (0, 1]")
        if self.k < 0 or self.n_store < 1 or self.k > self.n_store:
            raise ValueError("need 0 <= k <= n_store and n_store >= 1")
        if self.w1 <= 0:
            raise ValueError("optimistic initial weight must be positive")


@dataclass
class CacheEntry:
    key: int
    clause: object
    lbd: int
    weight: float
    status: str = FROZEN
    birth_tick: int = 0
    last_reward_tick: int = -1

    def order_key(self):
        return (-self.weight, self.lbd, self.birth_tick, self.key)


class CallEvidence(NamedTuple):
    ua: int = 0
    uf: int = 0
    nf: int = 0
    lbd_now: int = 1


def reward(evidence: CallEvidence, policy: BanditPolicy) -> float:
    e = evidence
    if e.lbd_now < 1:
        raise InvalidLBD(f"LBD must be >= 1, got {e.lbd_now}")
    if e.ua + e.uf + e.nf > 1:
        raise ValueError("ua, uf and nf are mutually exclusive")
    return policy.a * (1 - 2 * e.lbd_now + e.ua - e.uf - 0.25 * e.nf)


def updated_weight(w: float, r: float, lam: float) -> float:
    return w + lam * (r - w)


def closed_form_weight(w1: float, rewards, lam: float) -> float:
    """Weight after the rewards R_1..R_t, written out as a discounted sum."""
    t = len(rewards)
    return (1 - lam) ** t * w1 + lam * sum((1 - lam) ** (t - i) * r for i, r in enumerate(rewards, 1))


@dataclass
class Partition:
    active: list = field(default_factory=list)
    frozen: list = field(default_factory=list)
    deleted: list = field(default_factory=list)

    @property
    def frozen_keys(self) -> frozenset:
        return frozenset(e.key for e in self.frozen)


class ConstraintCache:
    def __init__(self, policy: BanditPolicy = BanditPolicy()):
        self.policy = policy
        self.entries: Dict[int, CacheEntry] = {}
        self.deleted_total = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def counts(self):
        act = sum(1 for e in self.entries.values() if e.status == ACTIVE)
        return act, len(self.entries) - act

    def snapshot(self) -> list:
        return [
            {"key": e.key, "lbd": e.lbd, "weight": e.weight, "status": e.status, "birth_tick": e.birth_tick}
            for e in sorted(self.entries.values(), key=CacheEntry.order_key)
        ]

    def export_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.snapshot(), fh, indent=1)


def select_for_tick(cache: ConstraintCache, policy: Optional[BanditPolicy] = None) -> Partition:
    """Rank entries by weight and split them into active / frozen / deleted.

    Deleted entries are removed from the cache for good.
    """
    policy = policy or cache.policy
    ranked = sorted(cache.entries.values(), key=CacheEntry.order_key)
    part = Partition(ranked[: policy.k], ranked[policy.k: policy.n_store], ranked[policy.n_store:])
    for e in part.active:
        e.status = ACTIVE
    for e in part.frozen:
        e.status = FROZEN
    for e in part.deleted:
        del cache.entries[e.key]
    cache.deleted_total += len(part.deleted)
    return part


def ingest_evidence(outcome, partition: Partition) -> Dict[int, CallEvidence]:
    ev = {}
    for e in partition.active:
        u = outcome.usage_report.get(e.key)
        used = bool(u and u.used)
        lbd = u.lbd if (u and u.lbd) else e.lbd
        ev[e.key] = CallEvidence(ua=int(used), lbd_now=lbd)
    redisc = {lc.key: lc.lbd for lc in outcome.new_learned}
    redisc.update(getattr(outcome, "rediscovery_lbd", None) or {})
    for e in partition.frozen:
        if e.key in outcome.rediscovery_report:
            ev[e.key] = CallEvidence(uf=1, lbd_now=redisc.get(e.key, e.lbd))
        else:
            ev[e.key] = CallEvidence(nf=1, lbd_now=e.lbd)
    return ev


def update_weights(cache: ConstraintCache, outcome, policy: Optional[BanditPolicy] = None,
                   tick: int = 0, partition: Optional[Partition] = None) -> None:
    """Apply one tick of rewards and insert newly learned clauses.

    ``partition`` must be the one chosen by :func:`select_for_tick` for the
    solve that produced ``outcome``.
    """
    policy = policy or cache.policy
    lam = policy.lam
    if partition is not None:
        for key, ev in ingest_evidence(outcome, partition).items():
            e = cache.entries[key]
            e.lbd = ev.lbd_now
            e.weight = updated_weight(e.weight, reward(ev, policy), lam)
            e.last_reward_tick = tick
    for lc in outcome.new_learned:
        if lc.key in cache.entries:
            continue
        r = reward(CallEvidence(lbd_now=lc.lbd), policy)
        cache.entries[lc.key] = CacheEntry(
            lc.key, lc.clause, lc.lbd, policy.w1 + lam * r, FROZEN, tick, tick,
        )
