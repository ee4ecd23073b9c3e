"""Reachability tests: verdicts cross-checked against the product machine."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, load_fixture_text
from summachine.generator import generate_system
from summachine.product_oracle import build_product, deadlock_states, product_reachable
from summachine.reachability import (
    CandidateMatrix,
    Configuration,
    ReachQuery,
    certify_concurrent,
    co_fast_nodes,
    global_reachable,
    list_deadlocks,
    local_search,
    materialize_configuration,
)
from summachine.spec_model import parse_system
from summachine.unfolding import unfold


def load(name):
    spec = parse_system(load_fixture_text(name))
    return spec, unfold(spec)


def test_local_search():
    spec, sm = load("pingpong")
    m1 = sm.unfoldings[0]
    assert local_search(sm, 1, "B") == [m1.node_named("B", 0)]
    assert local_search(sm, 1, "A") == [m1.root, m1.node_named("A", 1)]
    with pytest.raises(ValueError, match="no state"):
        local_search(sm, 1, "Q")


def test_local_search_blocked():
    spec, sm = load("mismatch")
    assert local_search(sm, 1, "B") == []


def test_query_construction():
    spec, sm = load("pingpong")
    q = ReachQuery.from_names(spec, {"F1": "B", "F2": "Y"})
    assert q.as_dict() == {1: "B", 2: "Y"}
    with pytest.raises(ValueError):
        ReachQuery.from_names(spec, {"F1": "Q"})
    with pytest.raises(KeyError):
        ReachQuery.from_names(spec, {"F9": "A"})
    with pytest.raises(ValueError):
        ReachQuery.of({7: "A"}).validate(spec)


def test_certify_conflict_rejects_and_accepts():
    spec, sm = load("conflict")
    m1, m2 = sm.unfoldings
    b0 = m1.node_named("B", 0)
    counters = {}
    reject = certify_concurrent(
        CandidateMatrix([1, 2], {1: [b0], 2: [m2.node_named("Z", 0)]})
    )
    assert reject is None
    accept = certify_concurrent(
        CandidateMatrix([1, 2], {1: [b0], 2: [m2.node_named("Y", 0)]})
    )
    assert accept is not None
    assert accept.components == {1: b0, 2: m2.node_named("Y", 0)}


def test_certify_single_machine_no_checks():
    spec, sm = load("pingpong")
    counters = {
        "pairwise_checks": 0,
        "chain_checks": 0,
        "validation_checks": 0,
        "chain_disagreements": 0,
        "steps_max": 0,
    }
    got = certify_concurrent(
        CandidateMatrix([1], {1: [sm.unfoldings[0].root]}), counters=counters
    )
    assert got is not None and counters["pairwise_checks"] == 0


def test_certify_unknown_mode():
    spec, sm = load("pingpong")
    with pytest.raises(ValueError):
        certify_concurrent(CandidateMatrix([1], {1: [sm.unfoldings[0].root]}), mode="magic")


def assert_matches_oracle(spec, sm, mode="pairwise"):
    pm = build_product(spec)
    for combo in itertools.product(*(sorted(m.states) for m in spec.machines)):
        targets = {i: s for i, s in enumerate(combo, start=1)}
        want = product_reachable(pm, targets)
        got = global_reachable(sm, ReachQuery.of(targets), mode=mode)
        assert got.reachable == want, (spec.name, combo, mode)
        if got.reachable:
            assert got.witness is not None
            assert {i: n.base for i, n in got.witness.components.items()} == targets
        else:
            assert got.witness is None
    return pm


def test_full_vector_agreement_on_fixtures():
    for name in FIXTURE_NAMES:
        spec, sm = load(name)
        assert_matches_oracle(spec, sm)
        assert_matches_oracle(spec, sm, mode="chain")


def test_initial_vector_always_reachable():
    for name in FIXTURE_NAMES:
        spec, sm = load(name)
        q = ReachQuery.of({m.index: m.initial for m in spec.machines})
        v = global_reachable(sm, q)
        assert v.reachable
        assert all(n.parent is None for n in v.witness.components.values())


def test_partial_query():
    spec, sm = load("async2")
    v = global_reachable(sm, ReachQuery.from_names(spec, {"F1": "B"}))
    assert v.reachable and v.witness.machines() == [1]
    assert global_reachable(sm, ReachQuery.of({})).reachable  # empty conjunction


def test_diagnostics_shape():
    spec, sm = load("pingpong")
    v = global_reachable(sm, ReachQuery.of({1: "B", 2: "Y"}))
    d = v.diagnostics
    assert d["mode"] == "pairwise"
    assert d["local_matches"] == {"F1": 1, "F2": 1}
    assert d["k_global"] == 1
    assert d["pairwise_checks"] <= d["k_global"] ** 2 * 1  # n(n-1)/2 pairs
    assert not d["candidates_capped"]


def test_witnesses_replay_on_product_edges():
    for name in FIXTURE_NAMES:
        spec, sm = load(name)
        pm = build_product(spec)
        edge_set = {
            (pm.states[src], label, pm.states[dst])
            for src, out in enumerate(pm.edges)
            for label, dst in out
        }
        for combo in itertools.product(*(sorted(m.states) for m in spec.machines)):
            targets = {i: s for i, s in enumerate(combo, start=1)}
            v = global_reachable(sm, ReachQuery.of(targets))
            if not v.reachable:
                continue
            trace = materialize_configuration(sm, v.witness)
            assert trace.vectors[0] == pm.initial
            assert trace.vectors[-1] == combo
            for pos, label in enumerate(trace.labels):
                step = (trace.vectors[pos], label, trace.vectors[pos + 1])
                assert step in edge_set, (name, step)


def test_materialize_async_order():
    spec, sm = load("async2")
    m1, m2 = sm.unfoldings
    c = Configuration({1: m1.node_named("B", 0), 2: m2.node_named("Y", 0)})
    trace = materialize_configuration(sm, c)
    assert trace.vectors == [("A", "X"), ("B", "X"), ("B", "Y")]
    assert trace.labels == [("async", 1, "tau"), ("async", 2, "sigma")]


def test_materialize_sync_fires_atomically():
    spec, sm = load("pingpong")
    m1, m2 = sm.unfoldings
    c = Configuration({1: m1.node_named("B", 0), 2: m2.node_named("Y", 0)})
    trace = materialize_configuration(sm, c)
    assert trace.vectors == [("A", "X"), ("B", "Y")]
    assert trace.labels == [("sync", 1, 2, "ping")]


def test_materialize_initial_is_trivial():
    spec, sm = load("chain3")
    trace = materialize_configuration(
        sm, Configuration(dict(sm.initial_configuration()))
    )
    assert len(trace.vectors) == 1 and trace.labels == []


def test_materialize_rejects_conflicting():
    spec, sm = load("conflict")
    m1, m2 = sm.unfoldings
    c = Configuration({1: m1.node_named("B", 0), 2: m2.node_named("Z", 0)})
    with pytest.raises(ValueError, match="not concurrent"):
        materialize_configuration(sm, c)


def test_deadlocks_mismatch():
    spec, sm = load("mismatch")
    dead = list_deadlocks(sm)
    assert len(dead) == 1  # both roots share one stuck vector
    assert dead[0].bases_by_name(spec) == {"F1": "A", "F2": "X"}


def test_deadlocks_match_oracle_on_fixtures():
    for name in FIXTURE_NAMES:
        spec, sm = load(name)
        pm = build_product(spec)
        want = set(deadlock_states(pm))
        got = {
            tuple(c.components[k].base for k in sorted(c.components))
            for c in list_deadlocks(sm)
        }
        assert got == want, name


SPLIT3 = """
system split3
machine F1 { init A states A B trans A -> B : m1 with F3 }
machine F2 { init P states P Q trans P -> Q : m2 with F3 }
machine F3 { init X states X U V trans X -> U : m1 with F1 trans X -> V : m2 with F2 }
"""


def test_chain_mode_disagreement_is_logged_not_accepted():
    spec = parse_system(SPLIT3)
    sm = unfold(spec)
    q = ReachQuery.of({1: "B", 2: "Q", 3: "V"})
    v = global_reachable(sm, q, mode="chain")
    assert not v.reachable  # pairwise validation overrules the chain pass
    assert v.diagnostics["chain_disagreements"] >= 1
    assert not product_reachable(build_product(spec), q.as_dict())
    # pairwise mode agrees directly
    assert not global_reachable(sm, q).reachable


def test_cost_envelopes_and_step_bound():
    for seed in range(30):
        spec = generate_system(seed, 3, 4, 2)
        sm = unfold(spec)
        depth = max(n.depth for u in sm.unfoldings for n in u.nodes)
        n = spec.n
        states = [sorted(m.states) for m in spec.machines]
        combo = tuple(s[seed % len(s)] for s in states)
        for mode in ("pairwise", "chain"):
            v = global_reachable(
                sm, ReachQuery.of({i: s for i, s in enumerate(combo, 1)}), mode=mode
            )
            d = v.diagnostics
            k = d["k_global"]
            assert d["pairwise_checks"] <= k * k * n * (n - 1) // 2
            assert d["chain_checks"] <= k * k * (n - 1)
            assert d["steps_max"] <= 2 * depth


@given(
    seed=st.integers(0, 5_000),
    n=st.integers(2, 3),
    m=st.integers(2, 4),
    coupling=st.integers(0, 3),
)
@settings(max_examples=30, deadline=None)
def test_full_vector_agreement_random(seed, n, m, coupling):
    spec = generate_system(seed, n, m, coupling)
    sm = unfold(spec)
    assert_matches_oracle(spec, sm)


def test_parallel_local_search_same_result():
    spec, sm = load("chain3")
    q = ReachQuery.of({1: "D", 2: "U", 3: "Z"})
    a = global_reachable(sm, q)
    b = global_reachable(sm, q, parallel_search=True)
    assert a.reachable == b.reachable == True
    assert a.witness.components == b.witness.components


def test_co_fast_nodes_counts_walks():
    spec, sm = load("async2")
    m1, m2 = sm.unfoldings
    ok, steps = co_fast_nodes(m1.node_named("B", 0), m2.node_named("Y", 0))
    assert ok and steps == 2  # one hop up in each tree
    ok0, steps0 = co_fast_nodes(m1.root, m2.root)
    assert ok0 and steps0 == 0
