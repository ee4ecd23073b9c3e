"""Formula parser and printer tests."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from summachine.formulas import (
    And,
    Atom,
    Bool,
    FormulaError,
    Implies,
    Not,
    Or,
    Temporal,
    Until,
    conjunction_of,
    formula_to_text,
    parse_formula,
)


def test_parse_atoms():
    assert parse_formula("p") == Atom("p")
    assert parse_formula('"B"') == Atom("B")
    assert parse_formula('F1:"B"') == Atom("B", machine="F1")
    assert parse_formula("F1:B") == Atom("B", machine="F1")
    assert parse_formula("true") == Bool(True)


def test_parse_temporal():
    assert parse_formula('EF "B"') == Temporal("EF", Atom("B"))
    assert parse_formula("AG (p | q)") == Temporal("AG", Or(Atom("p"), Atom("q")))
    assert parse_formula("A [p U q]") == Until("A", Atom("p"), Atom("q"))
    assert parse_formula("E [p U q]") == Until("E", Atom("p"), Atom("q"))


def test_parse_precedence():
    # implies binds loosest, then |, then &, then prefixes
    f = parse_formula("!a -> b | c & d")
    assert f == Implies(Not(Atom("a")), Or(Atom("b"), And(Atom("c"), Atom("d"))))
    assert parse_formula("a -> b -> c") == Implies(Atom("a"), Implies(Atom("b"), Atom("c")))


def test_parse_quantifier_vs_atom():
    # Bare A is an atom unless followed by [ ... U ... ]
    assert parse_formula("A") == Atom("A")
    assert parse_formula("A [A U E]") == Until("A", Atom("A"), Atom("E"))
    # AX etc. are always operators; quote to use them as atoms
    assert parse_formula("AX p") == Temporal("AX", Atom("p"))
    assert parse_formula('"AX"') == Atom("AX")


def test_parse_errors():
    for bad in ["", "p &", "(p", "A [p U", "EF", 'F1:', '"open', "p q", "1p"]:
        with pytest.raises(FormulaError):
            parse_formula(bad)


def test_conjunction_of():
    assert conjunction_of([]) == Bool(True)
    assert conjunction_of([Atom("p")]) == Atom("p")
    assert conjunction_of([Atom("p"), Atom("q")]) == And(Atom("p"), Atom("q"))


_atoms = st.sampled_from([Atom("p"), Atom("q"), Atom("B", machine="F1"), Bool(True)])


def _formulas(depth: int):
    if depth == 0:
        return _atoms
    sub = _formulas(depth - 1)
    return st.one_of(
        _atoms,
        st.builds(Not, sub),
        st.builds(And, sub, sub),
        st.builds(Or, sub, sub),
        st.builds(Implies, sub, sub),
        st.builds(Temporal, st.sampled_from(["AX", "EX", "AF", "EF", "AG", "EG"]), sub),
        st.builds(Until, st.sampled_from(["A", "E"]), sub, sub),
    )


@given(_formulas(3))
@settings(max_examples=100, deadline=None)
def test_roundtrip_random_formulas(f):
    assert parse_formula(formula_to_text(f)) == f
