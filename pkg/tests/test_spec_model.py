"""Parser, pretty-printer, and validator tests for the system description DSL."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, load_fixture_text
from summachine.generator import generate_system
from summachine.spec_model import (
    ActionLabel,
    CfsmSpec,
    CfsmTransition,
    SpecError,
    SystemSpec,
    parse_system,
    pretty_print,
    validate_system,
)


def test_parse_pingpong():
    spec = parse_system(load_fixture_text("pingpong"))
    assert spec.name == "pingpong"
    assert spec.n == 2
    m1, m2 = spec.machines
    assert m1.name == "F1" and m1.index == 1
    assert m1.states == ("A", "B") and m1.initial == "A"
    assert len(m1.transitions) == 2
    ping = m1.transitions[0]
    assert ping == CfsmTransition("A", ActionLabel("ping", 2), "B")
    assert ping.action.is_sync and ping.action.kind == "sync"
    assert m2.transitions[0].action.partner == 1


def test_parse_single_machine_self_loop():
    spec = parse_system("system tiny machine F1 { init A states A trans A -> A : tau }")
    assert spec.n == 1
    (m,) = spec.machines
    assert m.transitions == (CfsmTransition("A", ActionLabel("tau"), "A"),)
    assert not m.transitions[0].action.is_sync


def test_parse_labels_and_comments():
    spec = parse_system(
        "# comment\n"
        "system s\n"
        "machine F1 {\n"
        "  init A\n"
        "  states A B  # trailing comment\n"
        "  trans A -> B : go\n"
        "  label B : done goal\n"
        "}\n"
    )
    m = spec.machines[0]
    assert m.labels == {"B": frozenset({"done", "goal"})}
    assert m.props_of("B") == frozenset({"B", "done", "goal"})
    assert m.props_of("A") == frozenset({"A"})


def test_parse_error_unknown_machine():
    text = "system s machine F1 { init A states A B trans A -> B : p with F9 }"
    with pytest.raises(SpecError, match="unknown machine 'F9'"):
        parse_system(text)


def test_parse_error_undeclared_state():
    with pytest.raises(SpecError, match="undeclared state 'C'"):
        parse_system("system s machine F1 { init A states A B trans A -> C : p }")


def test_parse_error_duplicate_machine():
    text = "system s machine F1 { init A states A } machine F1 { init B states B }"
    with pytest.raises(SpecError, match="duplicate machine"):
        parse_system(text)


def test_parse_error_duplicate_state():
    with pytest.raises(SpecError, match="duplicate state"):
        parse_system("system s machine F1 { init A states A A }")


def test_parse_error_reports_position():
    try:
        parse_system("system s\nmachine F1 {\n  init A\n  states A\n  trans A -> @ : p\n}")
    except SpecError as err:
        assert err.line == 5
        assert err.column == 14
    else:
        pytest.fail("expected SpecError")


def test_parse_error_keyword_as_name():
    with pytest.raises(SpecError, match="keyword"):
        parse_system("system trans machine F1 { init A states A }")


def test_validate_fixtures_clean():
    # mismatch is deliberately incomplete (its whole point is that no action
    # ever finds a counterpart), so it is checked separately below.
    for name in FIXTURE_NAMES:
        if name == "mismatch":
            continue
        spec = parse_system(load_fixture_text(name))
        assert validate_system(spec) == [], name


def test_validate_unmatched_sync():
    spec = parse_system(load_fixture_text("mismatch"))
    # Parseable and per-machine consistent, but ping/pong have no counterparts.
    report = validate_system(spec)
    assert len(report) == 2
    assert any("unmatched sync action 'ping'" in r for r in report)
    assert any("unmatched sync action 'pong'" in r for r in report)


def test_validate_partner_out_of_range():
    m = CfsmSpec(
        index=1, name="F1", states=("A", "B"), initial="A",
        transitions=(CfsmTransition("A", ActionLabel("p", 1), "B"),),
    )
    report = validate_system(SystemSpec(name="s", machines=(m,)))
    assert any("sync partner out of range" in r for r in report)


def test_validate_duplicate_transition():
    m = CfsmSpec(
        index=1, name="F1", states=("A",), initial="A",
        transitions=(
            CfsmTransition("A", ActionLabel("p"), "A"),
            CfsmTransition("A", ActionLabel("p"), "A"),
        ),
    )
    report = validate_system(SystemSpec(name="s", machines=(m,)))
    assert any("duplicate transition" in r for r in report)


def test_validate_mutation_breaks_reciprocity():
    spec = parse_system(load_fixture_text("pingpong"))
    m1, m2 = spec.machines
    # Drop F2's pong counterpart: exactly the pong declaration goes stale.
    m2_cut = CfsmSpec(
        index=2, name="F2", states=m2.states, initial=m2.initial,
        transitions=m2.transitions[:1], labels=m2.labels,
    )
    report = validate_system(SystemSpec(name=spec.name, machines=(m1, m2_cut)))
    assert report == [
        "machine F1: unmatched sync action 'pong' (no counterpart in machine F2)"
    ]


def test_roundtrip_fixtures():
    for name in FIXTURE_NAMES:
        spec = parse_system(load_fixture_text(name))
        assert parse_system(pretty_print(spec)) == spec, name


@given(
    seed=st.integers(0, 10_000),
    n=st.integers(1, 4),
    m=st.integers(1, 6),
    coupling=st.integers(0, 3),
)
@settings(max_examples=100, deadline=None)
def test_roundtrip_random_systems(seed, n, m, coupling):
    if coupling > 0 and n < 2:
        coupling = 0
    spec = generate_system(seed, n, m, coupling)
    assert parse_system(pretty_print(spec)) == spec


@given(seed=st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_generator_deterministic(seed):
    a = generate_system(seed, 3, 4, 2)
    b = generate_system(seed, 3, 4, 2)
    assert a == b


def test_generator_infeasible_parameters():
    with pytest.raises(ValueError, match="at least two machines"):
        generate_system(0, 1, 3, coupling=1)
    with pytest.raises(ValueError):
        generate_system(0, 0, 3, coupling=0)


def test_generator_single_machine_no_coupling():
    spec = generate_system(7, 1, 3, coupling=0)
    assert spec.n == 1
    assert validate_system(spec) == []
