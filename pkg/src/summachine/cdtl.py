"""Branching-time evaluation over single unfoldings plus conjunction forms."""

from __future__ import annotations

from dataclasses import dataclass

from .formulas import (
    And,
    Atom,
    Bool,
    Formula,
    FormulaError,
    Implies,
    Not,
    Or,
    Temporal,
    Until,
    conjunction_of,
)
from .reachability import CANDIDATE_CAP, CandidateMatrix, Configuration, certify_concurrent
from .spec_model import SystemSpec
from .unfolding import Node, SumMachine, Unfolding

GLOBAL_FORMS = {"conj-atoms": "atoms", "conj-AX": "ax", "conj-AF": "af"}


def _succ(s: Node) -> list[Node]:
    """Path successors: cut-off leaves loop back to their matching ancestor."""
    if s.cutoff:
        return [s.cutoff_target]
    return s.children


def _validate_atoms(u: Unfolding, f: Formula) -> None:
    if isinstance(f, Atom):
        if f.machine is not None and f.machine != u.machine.name:
            raise FormulaError(
                f"atom bound to machine {f.machine} evaluated in {u.machine.name}"
            )
        if f.prop not in u.machine.all_props():
            raise FormulaError(
                f"proposition {f.prop!r} not declared in machine {u.machine.name}"
            )
    elif isinstance(f, Not):
        _validate_atoms(u, f.sub)
    elif isinstance(f, (And, Or, Implies)):
        _validate_atoms(u, f.left)
        _validate_atoms(u, f.right)
    elif isinstance(f, Temporal):
        _validate_atoms(u, f.sub)
    elif isinstance(f, Until):
        _validate_atoms(u, f.left)
        _validate_atoms(u, f.right)


def _shrink(universe: set[Node], keep) -> set[Node]:
    out = set(universe)
    changed = True
    while changed:
        changed = False
        for n in list(out):
            if not keep(n, out):
                out.discard(n)
                changed = True
    return out


def _grow(seed: set[Node], nodes: list[Node], admit) -> set[Node]:
    out = set(seed)
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n not in out and admit(n, out):
                out.add(n)
                changed = True
    return out


def _sat(u: Unfolding, f: Formula, memo: dict[Formula, set[Node]]) -> set[Node]:
    hit = memo.get(f)
    if hit is not None:
        return hit
    nodes = u.nodes
    if isinstance(f, Bool):
        out = set(nodes) if f.value else set()
    elif isinstance(f, Atom):
        out = {n for n in nodes if f.prop in u.machine.props_of(n.base)}
    elif isinstance(f, Not):
        out = set(nodes) - _sat(u, f.sub, memo)
    elif isinstance(f, And):
        out = _sat(u, f.left, memo) & _sat(u, f.right, memo)
    elif isinstance(f, Or):
        out = _sat(u, f.left, memo) | _sat(u, f.right, memo)
    elif isinstance(f, Implies):
        out = (set(nodes) - _sat(u, f.left, memo)) | _sat(u, f.right, memo)
    elif isinstance(f, Temporal):
        sub = _sat(u, f.sub, memo)
        if f.op == "EX":
            out = {n for n in nodes if any(t in sub for t in _succ(n))}
        elif f.op == "AX":
            out = {n for n in nodes if all(t in sub for t in _succ(n))}
        elif f.op == "EF":
            out = _grow(sub, nodes, lambda n, z: any(t in z for t in _succ(n)))
        elif f.op == "AF":
            out = _grow(
                sub, nodes, lambda n, z: bool(_succ(n)) and all(t in z for t in _succ(n))
            )
        elif f.op == "EG":
            out = _shrink(
                sub, lambda n, z: not _succ(n) or any(t in z for t in _succ(n))
            )
        elif f.op == "AG":
            out = _shrink(sub, lambda n, z: all(t in z for t in _succ(n)))
        else:  # unreachable: Temporal validates its operator
            raise FormulaError(f"unknown operator {f.op}")
    elif isinstance(f, Until):
        left = _sat(u, f.left, memo)
        right = _sat(u, f.right, memo)
        if f.quant == "E":
            out = _grow(
                right, nodes, lambda n, z: n in left and any(t in z for t in _succ(n))
            )
        else:
            out = _grow(
                right,
                nodes,
                lambda n, z: n in left and bool(_succ(n)) and all(t in z for t in _succ(n)),
            )
    else:
        raise FormulaError(f"unsupported formula node: {f!r}")
    memo[f] = out
    return out


def sat_nodes(u: Unfolding, f: Formula) -> set[Node]:
    """All nodes of the unfolding satisfying the formula."""
    _validate_atoms(u, f)
    return _sat(u, f, {})


def eval_local(u: Unfolding, s: Node, f: Formula) -> bool:
    """Evaluate a single-machine formula at one node of its unfolding."""
    return s in sat_nodes(u, f)


@dataclass(frozen=True)
class GlobalForm:
    """Conjunction-shaped global query: one proposition per constrained machine."""

    kind: str  # "atoms" | "ax" | "af"
    atoms: tuple[tuple[int, str], ...]

    @classmethod
    def of(cls, kind: str, atoms: dict[int, str]) -> "GlobalForm":
        if kind not in ("atoms", "ax", "af"):
            raise FormulaError(f"unknown global form kind: {kind!r}")
        if not atoms:
            raise FormulaError("global form needs at least one proposition")
        return cls(kind, tuple(sorted(atoms.items())))

    def as_dict(self) -> dict[int, str]:
        return dict(self.atoms)

    def validate(self, spec: SystemSpec) -> None:
        for idx, prop in self.atoms:
            if not 1 <= idx <= spec.n:
                raise FormulaError(f"machine index {idx} out of range")
            if prop not in spec.machine(idx).all_props():
                raise FormulaError(
                    f"proposition {prop!r} not declared in machine {spec.machine(idx).name}"
                )


def parse_global(spec: SystemSpec, text: str) -> GlobalForm:
    """Parse e.g. 'conj-atoms F1:"B" F2:"Y"' against a system."""
    parts = text.split()
    if not parts or parts[0] not in GLOBAL_FORMS:
        raise FormulaError(
            f"global form must start with one of {sorted(GLOBAL_FORMS)}"
        )
    atoms: dict[int, str] = {}
    for tok in parts[1:]:
        name, _, prop = tok.partition(":")
        if not name or not prop:
            raise FormulaError(f"expected MACHINE:PROP, got {tok!r}")
        if len(prop) >= 2 and prop[0] == '"' and prop[-1] == '"':
            prop = prop[1:-1]
        try:
            m = spec.machine_named(name)
        except KeyError:
            raise FormulaError(f"unknown machine {name!r}") from None
        if m.index in atoms:
            raise FormulaError(f"machine {name} constrained twice")
        atoms[m.index] = prop
    form = GlobalForm.of(GLOBAL_FORMS[parts[0]], atoms)
    form.validate(spec)
    return form


def product_formula(spec: SystemSpec, g: GlobalForm) -> Formula:
    """The product-level CTL formula a global form claims to decide."""
    conj = conjunction_of(
        [Atom(prop, machine=spec.machine(i).name) for i, prop in g.atoms]
    )
    if g.kind == "atoms":
        return Temporal("EF", conj)
    if g.kind == "ax":
        return Temporal("AX", conj)
    return Temporal("AF", conj)


def _certify(sm: SumMachine, candidates: dict[int, list[Node]]) -> Configuration | None:
    machines = sorted(candidates)
    capped = {i: candidates[i][:CANDIDATE_CAP] for i in machines}
    if any(not capped[i] for i in machines):
        return None
    return certify_concurrent(CandidateMatrix(machines=machines, candidates=capped))


def eval_global(sm: SumMachine, g: GlobalForm) -> tuple[bool, Configuration | None]:
    """Evaluate a conjunction form over the sum machine, with a witness."""
    g.validate(sm.spec)
    atoms = g.as_dict()

    if g.kind == "atoms":
        candidates = {
            i: [n for n in sm.unfolding(i).nodes if prop in sm.spec.machine(i).props_of(n.base)]
            for i, prop in atoms.items()
        }
        config = _certify(sm, candidates)
        return config is not None, config

    if g.kind == "ax":
        # every first step of each constrained machine must satisfy its
        # proposition, and one co-existing vector of first steps must exist
        candidates = {}
        for i, prop in atoms.items():
            u = sm.unfolding(i)
            children = u.root.children
            if not all(prop in u.machine.props_of(c.base) for c in children):
                return False, None
            candidates[i] = children
        config = _certify(sm, candidates)
        return config is not None, config

    # af: every maximal local path must hit the proposition, and one
    # co-existing vector of strictly-future hits must exist
    candidates = {}
    for i, prop in atoms.items():
        u = sm.unfolding(i)
        if u.root not in sat_nodes(u, Temporal("AF", Atom(prop))):
            return False, None
        candidates[i] = [
            n for n in u.nodes if n.depth >= 1 and prop in u.machine.props_of(n.base)
        ]
    config = _certify(sm, candidates)
    return config is not None, config
