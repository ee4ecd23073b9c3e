"""Data model, text format, and validation for systems of communicating FSMs.

A system is an ordered list of machines. Each machine owns a finite set of
states, one initial state, and transitions that are either asynchronous
(local) or synchronous (a rendezvous with exactly one partner machine,
matched by action name). States may carry extra atomic propositions via
``label`` lines; every state always carries its own name as a proposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

KEYWORDS = frozenset({"system", "machine", "init", "states", "trans", "label", "with"})


class SpecError(Exception):
    """Syntax or reference error in a system description, with position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ActionLabel:
    """A transition action; sync actions carry the 1-based partner machine index."""

    name: str
    partner: int | None = None

    @property
    def is_sync(self) -> bool:
        return self.partner is not None

    @property
    def kind(self) -> str:
        return "sync" if self.partner is not None else "async"


@dataclass(frozen=True)
class CfsmTransition:
    source: str
    action: ActionLabel
    dest: str


@dataclass(frozen=True)
class CfsmSpec:
    """One machine: states, initial state, transitions, optional state labels."""

    index: int  # 1-based position within the system
    name: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[CfsmTransition, ...]
    labels: dict[str, frozenset[str]] = field(default_factory=dict)

    def transitions_from(self, state: str) -> tuple[CfsmTransition, ...]:
        return tuple(t for t in self.transitions if t.source == state)

    def props_of(self, state: str) -> frozenset[str]:
        """Atomic propositions of a state: its own name plus declared labels."""
        return frozenset({state}) | self.labels.get(state, frozenset())

    def all_props(self) -> frozenset[str]:
        out = set(self.states)
        for ps in self.labels.values():
            out |= ps
        return frozenset(out)


@dataclass(frozen=True)
class SystemSpec:
    name: str
    machines: tuple[CfsmSpec, ...]

    @property
    def n(self) -> int:
        return len(self.machines)

    def machine_named(self, name: str) -> CfsmSpec:
        for m in self.machines:
            if m.name == name:
                return m
        raise KeyError(f"unknown machine {name!r}")

    def machine(self, index: int) -> CfsmSpec:
        """Look up a machine by its 1-based index."""
        return self.machines[index - 1]


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT | SYM
    value: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        while col < len(line):
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            if ch.isalpha() or ch == "_":
                start = col
                while col < len(line) and (line[col].isalnum() or line[col] == "_"):
                    col += 1
                tokens.append(_Token("IDENT", line[start:col], lineno, start + 1))
                continue
            if line.startswith("->", col):
                tokens.append(_Token("SYM", "->", lineno, col + 1))
                col += 2
                continue
            if ch in "{}:":
                tokens.append(_Token("SYM", ch, lineno, col + 1))
                col += 1
                continue
            raise SpecError(f"unexpected character {ch!r}", lineno, col + 1)
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("SYM", "", 1, 1)
            raise SpecError(f"unexpected end of input, expected {what}", last.line, last.column)
        self.pos += 1
        return tok

    def expect_sym(self, sym: str) -> _Token:
        tok = self.next(f"'{sym}'")
        if tok.kind != "SYM" or tok.value != sym:
            raise SpecError(f"expected '{sym}', found {tok.value!r}", tok.line, tok.column)
        return tok

    def expect_keyword(self, word: str) -> _Token:
        tok = self.next(f"'{word}'")
        if tok.kind != "IDENT" or tok.value != word:
            raise SpecError(f"expected '{word}', found {tok.value!r}", tok.line, tok.column)
        return tok

    def expect_name(self, what: str) -> _Token:
        tok = self.next(what)
        if tok.kind != "IDENT":
            raise SpecError(f"expected {what}, found {tok.value!r}", tok.line, tok.column)
        if tok.value in KEYWORDS:
            raise SpecError(f"keyword {tok.value!r} cannot be used as {what}", tok.line, tok.column)
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "IDENT" and tok.value == word


def parse_system(text: str) -> SystemSpec:
    """Parse a system description; raises SpecError with line/column on failure.

    Machine order follows declaration order and fixes the 1-based indices used
    everywhere else. Sync partners are written by machine name and resolved in
    a second pass so forward references work.
    """
    p = _Parser(text)
    p.expect_keyword("system")
    sys_name = p.expect_name("system name").value

    raw_machines = []  # (name_tok, init_tok, states, raw_trans, raw_labels)
    machine_names: dict[str, int] = {}
    while p.at_keyword("machine"):
        p.expect_keyword("machine")
        name_tok = p.expect_name("machine name")
        if name_tok.value in machine_names:
            raise SpecError(f"duplicate machine name {name_tok.value!r}", name_tok.line, name_tok.column)
        machine_names[name_tok.value] = len(raw_machines) + 1
        p.expect_sym("{")
        p.expect_keyword("init")
        init_tok = p.expect_name("initial state")
        p.expect_keyword("states")
        states: list[str] = []
        seen_states = set()
        while True:
            tok = p.peek()
            if tok is None or tok.kind != "IDENT" or tok.value in KEYWORDS:
                break
            tok = p.next("state name")
            if tok.value in seen_states:
                raise SpecError(f"duplicate state {tok.value!r}", tok.line, tok.column)
            seen_states.add(tok.value)
            states.append(tok.value)
        if not states:
            tok = p.peek()
            line, col = (tok.line, tok.column) if tok else (name_tok.line, name_tok.column)
            raise SpecError("machine declares no states", line, col)

        raw_trans = []  # (src_tok, dst_tok, act_tok, partner_tok | None)
        raw_labels = []  # (state_tok, [prop names])
        while True:
            if p.at_keyword("trans"):
                if raw_labels:
                    tok = p.peek()
                    raise SpecError("trans lines must precede label lines", tok.line, tok.column)
                p.expect_keyword("trans")
                src = p.expect_name("source state")
                p.expect_sym("->")
                dst = p.expect_name("destination state")
                p.expect_sym(":")
                act = p.expect_name("action name")
                partner = None
                if p.at_keyword("with"):
                    p.expect_keyword("with")
                    partner = p.expect_name("partner machine name")
                raw_trans.append((src, dst, act, partner))
            elif p.at_keyword("label"):
                p.expect_keyword("label")
                st = p.expect_name("labeled state")
                p.expect_sym(":")
                props = []
                while True:
                    tok = p.peek()
                    if tok is None or tok.kind != "IDENT" or tok.value in KEYWORDS:
                        break
                    props.append(p.next("proposition").value)
                if not props:
                    raise SpecError("label line lists no propositions", st.line, st.column)
                raw_labels.append((st, props))
            else:
                break
        p.expect_sym("}")
        raw_machines.append((name_tok, init_tok, states, raw_trans, raw_labels))

    if not raw_machines:
        tok = p.peek()
        line, col = (tok.line, tok.column) if tok else (1, 1)
        raise SpecError("system declares no machines", line, col)
    tok = p.peek()
    if tok is not None:
        raise SpecError(f"unexpected {tok.value!r} after last machine", tok.line, tok.column)

    machines = []
    for idx, (name_tok, init_tok, states, raw_trans, raw_labels) in enumerate(raw_machines, start=1):
        state_set = set(states)
        if init_tok.value not in state_set:
            raise SpecError(f"undeclared initial state {init_tok.value!r}", init_tok.line, init_tok.column)
        transitions = []
        for src, dst, act, partner in raw_trans:
            for tok in (src, dst):
                if tok.value not in state_set:
                    raise SpecError(f"undeclared state {tok.value!r}", tok.line, tok.column)
            partner_idx = None
            if partner is not None:
                if partner.value not in machine_names:
                    raise SpecError(f"unknown machine {partner.value!r}", partner.line, partner.column)
                partner_idx = machine_names[partner.value]
            transitions.append(
                CfsmTransition(src.value, ActionLabel(act.value, partner_idx), dst.value)
            )
        labels: dict[str, frozenset[str]] = {}
        for st, props in raw_labels:
            if st.value not in state_set:
                raise SpecError(f"undeclared state {st.value!r}", st.line, st.column)
            labels[st.value] = labels.get(st.value, frozenset()) | frozenset(props)
        machines.append(
            CfsmSpec(
                index=idx,
                name=name_tok.value,
                states=tuple(states),
                initial=init_tok.value,
                transitions=tuple(transitions),
                labels=labels,
            )
        )
    return SystemSpec(name=sys_name, machines=tuple(machines))


def pretty_print(spec: SystemSpec) -> str:
    """Render a SystemSpec back to source text; inverse of parse_system."""
    lines = [f"system {spec.name}"]
    for m in spec.machines:
        lines.append(f"machine {m.name} {{")
        lines.append(f"  init {m.initial}")
        lines.append(f"  states {' '.join(m.states)}")
        for t in m.transitions:
            suffix = ""
            if t.action.partner is not None:
                suffix = f" with {spec.machines[t.action.partner - 1].name}"
            lines.append(f"  trans {t.source} -> {t.dest} : {t.action.name}{suffix}")
        for state in m.states:
            props = m.labels.get(state)
            if props:
                lines.append(f"  label {state} : {' '.join(sorted(props))}")
        lines.append("}")
    return "\n".join(lines) + "\n"


def validate_system(spec: SystemSpec) -> list[str]:
    """Check system-level invariants; returns a list of violations (empty = valid).

    Violations, not exceptions: a parsed-but-inconsistent system is data worth
    reporting in full, and programmatically built specs skip the parser.
    """
    report = []
    n = len(spec.machines)
    if n < 1:
        report.append("system has no machines")
    seen_names: set[str] = set()
    for pos, m in enumerate(spec.machines, start=1):
        where = f"machine {m.name}"
        if m.index != pos:
            report.append(f"{where}: index {m.index} out of order (expected {pos})")
        if m.name in seen_names:
            report.append(f"{where}: duplicate machine name")
        seen_names.add(m.name)
        if len(set(m.states)) != len(m.states):
            report.append(f"{where}: duplicate state names")
        if m.initial not in m.states:
            report.append(f"{where}: initial state {m.initial!r} not declared")
        seen_triples = set()
        for t in m.transitions:
            for endpoint in (t.source, t.dest):
                if endpoint not in m.states:
                    report.append(f"{where}: transition endpoint {endpoint!r} not declared")
            if not t.action.name:
                report.append(f"{where}: empty action name on {t.source}->{t.dest}")
            triple = (t.source, t.action.name, t.dest)
            if triple in seen_triples:
                report.append(f"{where}: duplicate transition {t.source} -> {t.dest} : {t.action.name}")
            seen_triples.add(triple)
            j = t.action.partner
            if j is not None:
                if j < 1 or j > n or j == m.index:
                    report.append(
                        f"{where}: sync partner out of range on "
                        f"{t.source} -> {t.dest} : {t.action.name} (partner {j})"
                    )
                else:
                    partner = spec.machines[j - 1]
                    reciprocal = any(
                        u.action.partner == m.index and u.action.name == t.action.name
                        for u in partner.transitions
                    )
                    if not reciprocal:
                        report.append(
                            f"{where}: unmatched sync action {t.action.name!r} "
                            f"(no counterpart in machine {partner.name})"
                        )
        for state in m.labels:
            if state not in m.states:
                report.append(f"{where}: label on undeclared state {state!r}")
    return report
