"""Unfolding construction tests: hand-traced fixtures plus structural properties."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, load_fixture_text
from summachine.generator import generate_system
from summachine.serialize import sum_from_json, sum_to_json, unfolding_dot
from summachine.spec_model import ActionLabel, CfsmTransition, parse_system
from summachine.unfolding import (
    IncomparableError,
    LimitExceeded,
    Limits,
    Node,
    desc,
    fvec_of,
    gen_next_async,
    gen_next_sync,
    is_cutoff,
    is_sync_compatible,
    unfold,
)


def build(name, **kw):
    return unfold(parse_system(load_fixture_text(name)), **kw)


def names(u):
    return [n.name for n in u.nodes]


def test_pingpong_unfolding():
    sm = build("pingpong")
    m1, m2 = sm.unfoldings
    assert names(m1) == ["A.0", "B.0", "A.1"]
    assert names(m2) == ["X.0", "Y.0", "X.1"]
    a1 = m1.node_named("A", 1)
    assert a1.cutoff and a1.cutoff_target is m1.root
    assert a1.fvec == m1.root.fvec == ("A", "X")
    x1 = m2.node_named("X", 1)
    assert x1.cutoff and x1.cutoff_target is m2.root
    assert sm.stats["nodes"] == 6
    assert sm.stats["cutoffs"] == 2
    assert sm.stats["dead"] == 0
    assert sm.stats["d_measured"] == 1.5


def test_pingpong_sync_pairs():
    sm = build("pingpong")
    m1, m2 = sm.unfoldings
    expected = [
        (m1.root, m2.root),
        (m1.node_named("B", 0), m2.node_named("Y", 0)),
        (m1.node_named("A", 1), m2.node_named("X", 1)),
    ]
    assert sm.sync_pairs == expected
    b0 = m1.node_named("B", 0)
    assert b0.sync_partner is m2.node_named("Y", 0)
    assert b0.kind == "sync_output"
    assert b0.env == (b0, b0.sync_partner)


def test_mismatch_unfolding_is_two_dead_roots():
    sm = build("mismatch")
    m1, m2 = sm.unfoldings
    assert names(m1) == ["A.0"] and names(m2) == ["X.0"]
    assert m1.root.dead and m2.root.dead
    assert sm.stats["dead"] == 2
    assert sm.stats["cutoffs"] == 0


def test_async2_unfolding():
    sm = build("async2")
    m1, m2 = sm.unfoldings
    assert names(m1) == ["A.0", "B.0"]
    assert names(m2) == ["X.0", "Y.0"]
    b0 = m1.node_named("B", 0)
    assert b0.kind == "async_output"
    assert b0.env == (b0, m2.root)
    assert b0.fvec == ("B", "X")
    # B has no outgoing transitions: terminal leaf, not a deadlock
    assert not b0.dead and not b0.cutoff
    assert sm.stats["dead"] == 0


def test_conflict_unfolding():
    sm = build("conflict")
    m1, m2 = sm.unfoldings
    assert names(m1) == ["A.0", "B.0", "C.0"]
    assert names(m2) == ["X.0", "Y.0", "Z.0"]
    assert [c.base for c in m1.root.children] == ["B", "C"]
    assert m1.node_named("B", 0).sync_partner is m2.node_named("Y", 0)
    assert m1.node_named("C", 0).sync_partner is m2.node_named("Z", 0)
    assert sm.stats["dead"] == 0  # all leaves terminal


def test_conflict_sync_compatibility():
    sm = build("conflict")
    m1, m2 = sm.unfoldings
    b0, z0 = m1.node_named("B", 0), m2.node_named("Z", 0)
    assert not is_sync_compatible(b0, z0)  # conflicting branches in both envs
    assert is_sync_compatible(m1.root, m2.root)
    assert is_sync_compatible(b0, m2.node_named("Y", 0))


def test_chain3_env_requires_remote_predecessors():
    sm = build("chain3")
    m1, m2, m3 = sm.unfoldings
    d0 = m1.node_named("D", 0)
    assert d0.env == (d0, m2.node_named("U", 0), m3.node_named("Z", 0))
    assert d0.fvec == ("D", "U", "Z")
    # the merge picked machine 3's later node over its root
    c0 = m1.node_named("C", 0)
    assert c0.env[2] is m3.node_named("Z", 0)
    assert [len(u.nodes) for u in sm.unfoldings] == [3, 3, 2]
    assert sm.stats["dead"] == 0 and sm.stats["cutoffs"] == 0


def test_self_loop_cuts_off_immediately():
    sm = unfold(parse_system("system s machine F1 { init A states A trans A -> A : tau }"))
    (m1,) = sm.unfoldings
    assert names(m1) == ["A.0", "A.1"]
    a1 = m1.node_named("A", 1)
    assert a1.cutoff and a1.cutoff_target is m1.root
    assert is_cutoff(a1) and not is_cutoff(m1.root)


def _two_roots():
    spec = parse_system(load_fixture_text("pingpong"))
    a = Node(machine=1, base="A", kind="initial")
    x = Node(machine=2, base="X", kind="initial")
    a.env = x.env = (a, x)
    a.fvec = x.fvec = ("A", "X")
    return spec, a, x


def test_gen_next_async_mechanics():
    spec, a, x = _two_roots()
    t = CfsmTransition("A", ActionLabel("tau"), "B")
    child = gen_next_async(a, t)
    assert child.base == "B" and child.kind == "async_output"
    assert child.env == (child, x)
    assert child.parent is a and a.children == [child]
    assert child.depth == 1


def test_gen_next_async_rejects_bad_inputs():
    spec, a, x = _two_roots()
    with pytest.raises(ValueError, match="sync transition"):
        gen_next_async(a, spec.machines[0].transitions[0])
    with pytest.raises(ValueError, match="source"):
        gen_next_async(a, CfsmTransition("B", ActionLabel("tau"), "A"))


def test_gen_next_sync_mechanics():
    spec, a, x = _two_roots()
    ping1 = spec.machines[0].transitions[0]
    ping2 = spec.machines[1].transitions[0]
    b, y = gen_next_sync(a, x, ping1, ping2)
    assert (b.base, y.base) == ("B", "Y")
    assert b.env is y.env and b.env == (b, y)
    assert b.sync_partner is y and y.sync_partner is b
    assert b.kind == y.kind == "sync_output"


def test_gen_next_sync_rejects_bad_inputs():
    spec, a, x = _two_roots()
    ping1 = spec.machines[0].transitions[0]
    pong2 = spec.machines[1].transitions[1]
    with pytest.raises(ValueError):
        gen_next_sync(a, x, ping1, pong2)  # names differ
    with pytest.raises(ValueError):
        gen_next_sync(a, a, ping1, ping1)  # same machine


def test_desc():
    spec, a, x = _two_roots()
    t = CfsmTransition("A", ActionLabel("tau"), "B")
    child = gen_next_async(a, t)
    assert desc(a, a) is a
    assert desc(a, child) is child
    assert desc(child, a) is child
    sibling = gen_next_async(a, CfsmTransition("A", ActionLabel("rho"), "B"))
    with pytest.raises(IncomparableError):
        desc(child, sibling)
    with pytest.raises(ValueError):
        desc(a, x)


def test_fvec_of():
    spec, a, x = _two_roots()
    assert fvec_of((a, x)) == ("A", "X")


def test_limit_exceeded_nodes():
    spec = parse_system(load_fixture_text("pingpong"))
    with pytest.raises(LimitExceeded) as err:
        unfold(spec, limits=Limits(max_nodes=2, max_depth=500))
    assert err.value.what == "node"


def test_limit_exceeded_depth():
    text = "system s machine F1 { init A states A B C D E " + " ".join(
        f"trans {a} -> {b} : t{i}" for i, (a, b) in enumerate(zip("ABCD", "BCDE"))
    ) + " }"
    with pytest.raises(LimitExceeded) as err:
        unfold(parse_system(text), limits=Limits(max_nodes=100, max_depth=2))
    assert err.value.what == "depth"


def test_unknown_mode():
    with pytest.raises(ValueError):
        unfold(parse_system(load_fixture_text("pingpong")), mode="magic")


def test_unfolding_edge_views():
    sm = build("pingpong")
    m1 = sm.unfoldings[0]
    assert [(p.name, a, c.name) for p, a, c in m1.local_edges] == [
        ("A.0", "ping", "B.0"),
        ("B.0", "pong", "A.1"),
    ]
    sync = m1.sync_edges
    assert (m1.root, sm.unfoldings[1].root) in sync  # initial-state link
    assert len(sync) == 3


def _random_spec(seed, n, m, coupling):
    if coupling > 0 and n < 2:
        coupling = 0
    return generate_system(seed, n, m, coupling)


@given(
    seed=st.integers(0, 10_000),
    n=st.integers(1, 4),
    m=st.integers(1, 5),
    coupling=st.integers(0, 3),
)
@settings(max_examples=60, deadline=None)
def test_structural_invariants_random(seed, n, m, coupling):
    spec = _random_spec(seed, n, m, coupling)
    sm = unfold(spec, limits=Limits(max_nodes=20_000, max_depth=2000))
    roots = [u.root for u in sm.unfoldings]
    assert fvec_of(tuple(roots)) == tuple(mm.initial for mm in spec.machines)
    for u in sm.unfoldings:
        i = u.index
        seen = set()
        for node in u.nodes:
            assert node.env[i - 1] is node
            assert (node.base, node.instance) not in seen
            seen.add((node.base, node.instance))
            for k, e in enumerate(node.env, start=1):
                if k != i:
                    assert e.kind in ("initial", "sync_output")
            if node.cutoff:
                assert not node.children
                assert node.cutoff_target is not None
                assert node.cutoff_target.fvec == node.fvec
            if node.dead:
                assert not node.children and not node.cutoff
                assert u.machine.transitions_from(node.base)
            if node.kind == "sync_output":
                assert node.sync_partner.sync_partner is node
                assert node.sync_partner.env is node.env
            # every async transition fires exactly once per expanded node
            # (children are re-sorted canonically, so compare as multisets)
            if not node.cutoff and node.children:
                async_fired = sorted(
                    (c.parent_transition.action.name, c.base)
                    for c in node.children
                    if c.sync_partner is None
                )
                expected = sorted(
                    (t.action.name, t.dest)
                    for t in u.machine.transitions_from(node.base)
                    if not t.action.is_sync
                )
                assert async_fired == expected


@given(
    seed=st.integers(0, 5_000),
    n=st.integers(2, 4),
    m=st.integers(2, 4),
    coupling=st.integers(0, 3),
)
@settings(max_examples=40, deadline=None)
def test_modes_agree_random(seed, n, m, coupling):
    spec = _random_spec(seed, n, m, coupling)
    limits = Limits(max_nodes=20_000, max_depth=2000)
    a = sum_to_json(unfold(spec, limits=limits, mode="sequential"))
    b = sum_to_json(unfold(spec, limits=limits, mode="parallel"))
    assert a == b


def test_modes_agree_fixtures(monkeypatch):
    for name in FIXTURE_NAMES:
        seq = sum_to_json(build(name, mode="sequential"))
        par = sum_to_json(build(name, mode="parallel"))
        assert seq == par, name
    monkeypatch.setenv("SUMMACHINE_THREADS", "1")
    assert sum_to_json(build("chain3", mode="parallel")) == sum_to_json(build("chain3"))


def test_json_roundtrip():
    for name in FIXTURE_NAMES:
        sm = build(name)
        text = sum_to_json(sm, seed=None)
        again = sum_to_json(sum_from_json(text), seed=None)
        assert text == again, name
        doc = json.loads(text)
        assert doc["schema"] == "summachine/v1"
        assert doc["kind"] == "sum_machine"


def test_json_reload_preserves_structure():
    sm = sum_from_json(sum_to_json(build("pingpong")))
    m1, m2 = sm.unfoldings
    a1 = m1.node_named("A", 1)
    assert a1.cutoff and a1.cutoff_target is m1.root
    assert a1.parent is m1.node_named("B", 0)
    assert m1.node_named("B", 0).sync_partner is m2.node_named("Y", 0)
    assert a1.env == (a1, m2.node_named("X", 1))
    assert a1.parent_transition.action.name == "pong"


def test_dot_export():
    sm = build("pingpong")
    dot = unfolding_dot(sm, sm.unfoldings[0])
    assert "digraph F1" in dot
    assert 'label="A.1" peripheries=2' in dot  # cut-off drawn double
    assert "style=dashed" in dot  # sync ghost edge
    assert 'label="ping"' in dot
    dead_dot = unfolding_dot(build("mismatch"), build("mismatch").unfoldings[0])
    assert "style=filled" in dead_dot
