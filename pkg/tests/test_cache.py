import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamcdcl.cache import (
    ACTIVE,
    FROZEN,
    BanditPolicy,
    CacheEntry,
    CallEvidence,
    ConstraintCache,
    InvalidLBD,
    Partition,
    closed_form_weight,
    ingest_evidence,
    reward,
    select_for_tick,
    update_weights,
    updated_weight,
)
from streamcdcl.clause import Clause
from streamcdcl.engine import MODEL, LearnedClause, SolveOutcome, Usage

POLICY = BanditPolicy()


def entry(key, weight, lbd=2, birth=0):
    return CacheEntry(key, Clause((key,)), lbd, weight, FROZEN, birth)


def cache_of(entries, policy=POLICY):
    c = ConstraintCache(policy)
    for e in entries:
        c.entries[e.key] = e
    return c


def outcome(new=(), used=(), rediscovered=(), lbds=None):
    return SolveOutcome(
        MODEL, None,
        [LearnedClause(k, Clause((k,)), l) for k, l in new],
        {k: Usage(True, (lbds or {}).get(k)) for k in used},
        set(rediscovered),
    )


def test_policy_validation():
    with pytest.raises(ValueError):
        BanditPolicy(lam=0)
    with pytest.raises(ValueError):
        BanditPolicy(lam=1.5)
    with pytest.raises(ValueError):
        BanditPolicy(k=10, n_store=5)
    with pytest.raises(ValueError):
        BanditPolicy(w1=0)
    assert BanditPolicy().n_store == 2 * BanditPolicy().k


def test_select_empty():
    p = select_for_tick(ConstraintCache())
    assert (p.active, p.frozen, p.deleted) == ([], [], [])


def test_select_orders_by_weight_then_lbd():
    es = [entry(1, 9), entry(2, 7, lbd=3), entry(3, 7, lbd=1), entry(4, 3), entry(5, 1)]
    c = cache_of(es, BanditPolicy(k=2, n_store=4))
    p = select_for_tick(c)
    assert [e.key for e in p.active] == [1, 3]
    assert [e.key for e in p.frozen] == [2, 4]
    assert [e.key for e in p.deleted] == [5]
    assert 5 not in c
    assert c.counts() == (2, 2)
    assert p.frozen_keys == frozenset({2, 4})


def test_select_tie_on_birth_then_key():
    es = [entry(9, 5, birth=1), entry(8, 5, birth=0), entry(7, 5, birth=1)]
    p = select_for_tick(cache_of(es, BanditPolicy(k=3, n_store=3)))
    assert [e.key for e in p.active] == [8, 7, 9]


def test_underfull_cache_all_active():
    es = [entry(i, float(i)) for i in range(1, 4)]
    p = select_for_tick(cache_of(es, BanditPolicy(k=5, n_store=10)))
    assert len(p.active) == 3 and not p.frozen and not p.deleted


@pytest.mark.parametrize("lbd", [1, 2, 3, 4, 5])
def test_reward_classes(lbd):
    a = 20
    assert reward(CallEvidence(ua=1, lbd_now=lbd), POLICY) == a * (1 - 2 * lbd + 1)
    assert reward(CallEvidence(lbd_now=lbd), POLICY) == a * (1 - 2 * lbd)
    assert reward(CallEvidence(uf=1, lbd_now=lbd), POLICY) == a * (1 - 2 * lbd - 1)
    assert reward(CallEvidence(nf=1, lbd_now=lbd), POLICY) == a * (1 - 2 * lbd - 0.25)


def test_reward_examples():
    assert reward(CallEvidence(ua=1, lbd_now=1), POLICY) == 0
    assert reward(CallEvidence(uf=1, lbd_now=3), POLICY) == -120
    assert reward(CallEvidence(nf=1, lbd_now=2), POLICY) == -65


def test_reward_errors():
    with pytest.raises(InvalidLBD):
        reward(CallEvidence(lbd_now=0), POLICY)
    with pytest.raises(ValueError):
        reward(CallEvidence(ua=1, nf=1, lbd_now=1), POLICY)


def test_update_rule():
    assert updated_weight(40, -40, 0.1) == pytest.approx(32)
    assert updated_weight(17.5, -65, 1.0) == -65


def test_constant_reward_closed_form():
    for lam in (0.01, 0.1, 0.5, 1.0):
        w, R = 40.0, -25.0
        for t in range(1, 60):
            w = updated_weight(w, R, lam)
            expect = (1 - lam) ** t * 40 + (1 - (1 - lam) ** t) * R
            assert abs(w - expect) < 1e-9
            assert abs(w - closed_form_weight(40, [R] * t, lam)) < 1e-9


def test_recursive_matches_closed_form_random():
    rng = np.random.default_rng(0)
    for lam in (0.01, 0.1, 0.5, 1.0):
        for _ in range(250):
            rs = rng.uniform(-200, 0, size=50)
            w = 40.0
            for r in rs:
                w = updated_weight(w, r, lam)
            assert abs(w - closed_form_weight(40.0, list(rs), lam)) < 1e-9


def test_ingest_evidence_classes():
    es = [entry(1, 5), entry(2, 4), entry(3, 3), entry(4, 2)]
    part = Partition(active=es[:2], frozen=es[2:])
    ev = ingest_evidence(outcome(used=[1], rediscovered=[3], lbds={1: 4}), part)
    assert ev[1] == CallEvidence(ua=1, lbd_now=4)
    assert ev[2] == CallEvidence(lbd_now=2)
    assert ev[3] == CallEvidence(uf=1, lbd_now=2)
    assert ev[4] == CallEvidence(nf=1, lbd_now=2)


def test_update_weights_inserts_and_rewards():
    pol = BanditPolicy(lam=0.5)
    c = ConstraintCache(pol)
    update_weights(c, outcome(new=[(10, 2), (11, 1)]), pol, tick=0)
    assert c.entries[10].weight == 40 + 0.5 * 20 * (1 - 4)
    assert c.entries[11].weight == 40 + 0.5 * 20 * (1 - 2)
    assert c.entries[10].birth_tick == 0
    part = select_for_tick(c, BanditPolicy(lam=0.5, k=1, n_store=2))
    assert [e.key for e in part.active] == [11]
    update_weights(c, outcome(used=[11]), pol, tick=1, partition=part)
    assert c.entries[11].weight == updated_weight(30, 0, 0.5)
    assert c.entries[10].weight == updated_weight(10, 20 * (1 - 4 - 0.25), 0.5)


def test_rediscovered_frozen_entry_keeps_single_slot():
    pol = BanditPolicy(lam=0.5, k=0, n_store=5)
    c = cache_of([entry(7, 10, lbd=4)], pol)
    part = select_for_tick(c)
    out = outcome(new=[(7, 2)], rediscovered=[7])
    out.rediscovery_lbd[7] = 2
    update_weights(c, out, pol, tick=3, partition=part)
    assert len(c) == 1
    e = c.entries[7]
    assert e.lbd == 2
    assert e.weight == updated_weight(10, 20 * (1 - 4 - 1), 0.5)
    assert e.birth_tick == 0


def test_deleted_entry_returns_fresh():
    pol = BanditPolicy(lam=0.5, k=1, n_store=1)
    c = cache_of([entry(1, 5), entry(2, -300)], pol)
    part = select_for_tick(c)
    assert [e.key for e in part.deleted] == [2]
    update_weights(c, outcome(new=[(2, 1)]), pol, tick=4, partition=part)
    assert c.entries[2].weight == 40 + 0.5 * 20 * (1 - 2)
    assert c.entries[2].birth_tick == 4


def test_idle_frozen_entry_decays_and_is_deleted():
    pol = BanditPolicy(lam=0.1, k=1, n_store=2)
    c = cache_of([entry(1, 40), entry(2, 40, lbd=1)], pol)
    history = []
    for t in range(200):
        part = select_for_tick(c)
        if 1 not in c:
            break
        history.append(c.entries[1].weight)
        used = [e.key for e in part.active]
        # a newcomer every tick keeps the cache over capacity
        update_weights(c, outcome(new=[(1000 + t, 1)], used=used), pol, tick=t, partition=part)
    assert 1 not in c
    assert all(b < a for a, b in zip(history, history[1:]))


def test_optimistic_insertion_beats_decayed_entries():
    a, w1 = POLICY.a, POLICY.w1
    for lam in (0.01, 0.1, 0.5, 1.0):
        t = math.ceil(math.log(w1 / a) / lam)
        for lbd in range(1, 11):
            fresh = w1 + lam * reward(CallEvidence(lbd_now=lbd), POLICY)
            old = fresh
            for _ in range(t):
                old = updated_weight(old, reward(CallEvidence(nf=1, lbd_now=lbd), POLICY), lam)
            assert fresh > old


def test_snapshot_and_export(tmp_path):
    c = cache_of([entry(1, 1.0), entry(2, 3.0)])
    snap = c.snapshot()
    assert [s["key"] for s in snap] == [2, 1]
    c.export_json(tmp_path / "c.json")
    assert json.loads((tmp_path / "c.json").read_text()) == snap


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 6), st.integers(1, 10),
    st.lists(st.tuples(st.lists(st.integers(1, 40), max_size=6), st.integers(0, 3)), min_size=1, max_size=30),
)
def test_capacity_invariant(k, extra, ticks):
    pol = BanditPolicy(lam=0.5, k=k, n_store=k + extra)
    c = ConstraintCache(pol)
    gone = {}
    for t, (new_keys, n_used) in enumerate(ticks):
        part = select_for_tick(c)
        assert len(part.active) <= pol.k
        assert len(part.active) + len(part.frozen) <= pol.n_store
        assert len(c) <= pol.n_store
        for e in part.deleted:
            gone[e.key] = t
        used = [e.key for e in part.active[:n_used]]
        redisc = [key for key in new_keys if key in part.frozen_keys]
        update_weights(c, outcome(new=[(key, 1 + key % 4) for key in new_keys], used=used, rediscovered=redisc),
                       pol, tick=t, partition=part)
        for key in set(new_keys):
            if key in gone and key not in part.frozen_keys and key not in {e.key for e in part.active}:
                # a deleted clause that comes back starts from scratch
                assert c.entries[key].birth_tick == t
