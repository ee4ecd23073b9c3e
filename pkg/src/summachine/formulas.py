"""Branching-time formula AST and text syntax.

Shared by the per-machine logic evaluator and the product-machine oracle.
Syntax examples: ``EF "B"``, ``AG (p | q)``, ``A [p U q]``, ``!F1:"B" -> EX goal``.
Atoms are bare identifiers or quoted strings, optionally machine-qualified
(``F1:B``); quoting is required for atoms that collide with the operator
keywords (A, E, AX, EX, AF, EF, AG, EG, U, true, false).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

Formula = Union["Bool", "Atom", "Not", "And", "Or", "Implies", "Temporal", "Until"]

_UNARY_OPS = ("AX", "EX", "AF", "EF", "AG", "EG")


class FormulaError(Exception):
    pass


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Atom:
    prop: str
    machine: str | None = None  # machine name, for product-level formulas


@dataclass(frozen=True)
class Not:
    sub: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Temporal:
    op: str  # one of AX EX AF EF AG EG
    sub: Formula

    def __post_init__(self):
        if self.op not in _UNARY_OPS:
            raise FormulaError(f"unknown temporal operator {self.op!r}")


@dataclass(frozen=True)
class Until:
    quant: str  # "A" or "E"
    left: Formula
    right: Formula


def _tokenize(text: str) -> list[str | tuple[str, str]]:
    """Tokens are operator/symbol strings, or ("name", ident) / ("str", value)."""
    tokens: list[str | tuple[str, str]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith("->", i):
            tokens.append("->")
            i += 2
        elif ch in "!&|()[]:":
            tokens.append(ch)
            i += 1
        elif ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise FormulaError("unterminated quoted atom")
            tokens.append(("str", text[i + 1 : j]))
            i = j + 1
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j]))
            i = j
        else:
            raise FormulaError(f"unexpected character {ch!r} in formula")
    return tokens


class _FormulaParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of formula")
        self.pos += 1
        return tok

    def expect(self, sym: str):
        tok = self.take()
        if tok != sym:
            raise FormulaError(f"expected {sym!r}, found {tok!r}")

    def parse(self) -> Formula:
        f = self.implies()
        if self.peek() is not None:
            raise FormulaError(f"trailing input at {self.peek()!r}")
        return f

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            f = self.implies()
            self.expect(")")
            return f
        if isinstance(tok, tuple) and tok[0] == "name":
            word = tok[1]
            if word in _UNARY_OPS:
                self.take()
                return Temporal(word, self.unary())
            if word in ("A", "E") and self.pos + 1 < len(self.tokens) and self.tokens[self.pos + 1] == "[":
                self.take()
                self.expect("[")
                left = self.implies()
                u = self.take()
                if u != ("name", "U"):
                    raise FormulaError(f"expected U in until, found {u!r}")
                right = self.implies()
                self.expect("]")
                return Until(word, left, right)
            if word == "true":
                self.take()
                return Bool(True)
            if word == "false":
                self.take()
                return Bool(False)
        return self.atom()

    def atom(self) -> Formula:
        tok = self.take()
        if isinstance(tok, tuple):
            kind, value = tok
            if self.peek() == ":":
                if kind == "str":
                    raise FormulaError("machine qualifier must be an identifier")
                self.take()
                prop = self.take()
                if not isinstance(prop, tuple):
                    raise FormulaError(f"expected proposition after ':', found {prop!r}")
                return Atom(prop[1], machine=value)
            return Atom(value)
        raise FormulaError(f"expected an atom, found {tok!r}")


def parse_formula(text: str) -> Formula:
    return _FormulaParser(text).parse()


def formula_to_text(f: Formula) -> str:
    """Render a formula to parseable text (atoms always quoted)."""
    if isinstance(f, Bool):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        base = f'"{f.prop}"'
        return f"{f.machine}:{base}" if f.machine else base
    if isinstance(f, Not):
        return f"!{formula_to_text(f.sub)}"
    if isinstance(f, And):
        return f"({formula_to_text(f.left)} & {formula_to_text(f.right)})"
    if isinstance(f, Or):
        return f"({formula_to_text(f.left)} | {formula_to_text(f.right)})"
    if isinstance(f, Implies):
        return f"({formula_to_text(f.left)} -> {formula_to_text(f.right)})"
    if isinstance(f, Temporal):
        return f"{f.op} {formula_to_text(f.sub)}"
    if isinstance(f, Until):
        return f"{f.quant} [{formula_to_text(f.left)} U {formula_to_text(f.right)}]"
    raise FormulaError(f"not a formula: {f!r}")


def conjunction_of(atoms: list[Atom]) -> Formula:
    """Right-nested conjunction of atoms; true when the list is empty."""
    if not atoms:
        return Bool(True)
    f: Formula = atoms[-1]
    for a in reversed(atoms[:-1]):
        f = And(a, f)
    return f
