"""Brute-force interleaving composition of a system, used as ground truth.

Deliberately naive: explicit BFS over global state vectors, no reduction of
any kind. Everything the rest of the package computes on the unfolded
representation is cross-validated against this module at desk scale.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .formulas import And, Atom, Bool, Formula, FormulaError, Implies, Not, Or, Temporal, Until
from .spec_model import SystemSpec

# Edge labels: ("async", i, action) or ("sync", i, j, action) with machine
# indices 1-based and i < j for sync.
EdgeLabel = tuple


class OracleTruncated(Exception):
    """Raised when a query needs the full state space but BFS hit the bound."""


@dataclass
class ProductMachine:
    spec: SystemSpec
    states: list[tuple[str, ...]]
    index: dict[tuple[str, ...], int]
    edges: list[list[tuple[EdgeLabel, int]]]  # per-state outgoing (label, dest)
    truncated: bool
    bound: int

    @property
    def initial(self) -> tuple[str, ...]:
        return self.states[0]

    @property
    def n_edges(self) -> int:
        return sum(len(out) for out in self.edges)

    def labels_of(self, state_idx: int) -> frozenset[tuple[str, str]]:
        """Union of component propositions as (machine name, prop) pairs."""
        vec = self.states[state_idx]
        out = set()
        for m, base in zip(self.spec.machines, vec):
            for p in m.props_of(base):
                out.add((m.name, p))
        return frozenset(out)

    def stats(self) -> dict:
        return {
            "product_states": len(self.states),
            "product_edges": self.n_edges,
            "truncated": self.truncated,
            "bound": self.bound,
        }


def build_product(spec: SystemSpec, bound: int = 10**6) -> ProductMachine:
    """BFS the interleaving semantics: async moves one machine, sync moves two.

    Exploration stops at `bound` reachable states; the result records whether
    it was truncated (negative answers are then unreliable).
    """
    initial = tuple(m.initial for m in spec.machines)
    states = [initial]
    index = {initial: 0}
    edges: list[list[tuple[EdgeLabel, int]]] = [[]]
    truncated = False
    queue = deque([0])

    def intern(vec: tuple[str, ...]) -> int | None:
        nonlocal truncated
        found = index.get(vec)
        if found is not None:
            return found
        if len(states) >= bound:
            truncated = True
            return None
        index[vec] = len(states)
        states.append(vec)
        edges.append([])
        queue.append(index[vec])
        return index[vec]

    while queue:
        v = queue.popleft()
        vec = states[v]
        out_seen = set()
        for i, mi in enumerate(spec.machines):
            for t in mi.transitions_from(vec[i]):
                if t.action.partner is None:
                    nxt = vec[:i] + (t.dest,) + vec[i + 1 :]
                    label: EdgeLabel = ("async", i + 1, t.action.name)
                    w = intern(nxt)
                    if w is not None and (label, w) not in out_seen:
                        out_seen.add((label, w))
                        edges[v].append((label, w))
                else:
                    j = t.action.partner - 1
                    if j <= i:
                        continue  # the pair is emitted once, from the lower side
                    mj = spec.machines[j]
                    for u in mj.transitions_from(vec[j]):
                        if u.action.name == t.action.name and u.action.partner == i + 1:
                            lst = list(vec)
                            lst[i], lst[j] = t.dest, u.dest
                            nxt = tuple(lst)
                            label = ("sync", i + 1, j + 1, t.action.name)
                            w = intern(nxt)
                            if w is not None and (label, w) not in out_seen:
                                out_seen.add((label, w))
                                edges[v].append((label, w))
    return ProductMachine(spec, states, index, edges, truncated, bound)


def product_reachable(pm: ProductMachine, targets: dict[int, str]) -> bool:
    """Is some reachable state consistent with the (possibly partial) targets?

    targets maps 1-based machine index to a state name. On a truncated
    machine only positive answers are trustworthy; a negative raises.
    """
    for vec in pm.states:
        if all(vec[i - 1] == base for i, base in targets.items()):
            return True
    if pm.truncated:
        raise OracleTruncated("state bound hit: absence of a match is not conclusive")
    return False


def deadlock_states(pm: ProductMachine) -> list[tuple[str, ...]]:
    """States with no outgoing edge where some machine still has transitions."""
    out = []
    for v, vec in enumerate(pm.states):
        if pm.edges[v]:
            continue
        stuck = any(
            m.transitions_from(vec[i]) for i, m in enumerate(pm.spec.machines)
        )
        if stuck:
            out.append(vec)
    return out


def diameter(pm: ProductMachine) -> int:
    """Longest shortest-path distance from the initial state."""
    dist = {0: 0}
    queue = deque([0])
    far = 0
    while queue:
        v = queue.popleft()
        for _, w in pm.edges[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                far = max(far, dist[w])
                queue.append(w)
    return far


def can_eventually_fire(pm: ProductMachine) -> list[frozenset[int]]:
    """Per state: which machines (1-based) fire on at least one path onward.

    Backward fixpoint over the reachable graph; a machine absent from the set
    at a state can never move again once the system is there.
    """
    firing: list[set[int]] = [set() for _ in pm.states]
    for v in range(len(pm.states)):
        for label, _ in pm.edges[v]:
            if label[0] == "async":
                firing[v].add(label[1])
            else:
                firing[v].add(label[1])
                firing[v].add(label[2])
    changed = True
    while changed:
        changed = False
        for v in range(len(pm.states)):
            for _, w in pm.edges[v]:
                add = firing[w] - firing[v]
                if add:
                    firing[v] |= add
                    changed = True
    return [frozenset(s) for s in firing]


# ---------------------------------------------------------------------------
# CTL labeling over the product graph


def _resolve_atom(pm: ProductMachine, atom: Atom) -> tuple[int, str]:
    if atom.machine is None:
        raise FormulaError(
            f"product-level atoms must be machine-qualified (got {atom.prop!r})"
        )
    m = pm.spec.machine_named(atom.machine)
    if atom.prop not in m.all_props():
        raise FormulaError(f"undeclared proposition {atom.prop!r} for machine {m.name}")
    return m.index, atom.prop


def _sat(pm: ProductMachine, f: Formula, memo: dict) -> frozenset[int]:
    key = id(f)
    if key in memo:
        return memo[key]
    n_states = len(pm.states)
    everything = frozenset(range(n_states))

    def succ_real(v: int) -> list[int]:
        return [w for _, w in pm.edges[v]]

    def succ_loop(v: int) -> list[int]:
        # Fixpoint semantics treat end states as absorbing so F/G/U quantify
        # over maximal paths instead of vanishing at dead ends.
        return succ_real(v) or [v]

    if isinstance(f, Bool):
        result = everything if f.value else frozenset()
    elif isinstance(f, Atom):
        i, prop = _resolve_atom(pm, f)
        m = pm.spec.machine(i)
        result = frozenset(
            v for v in range(n_states) if prop in m.props_of(pm.states[v][i - 1])
        )
    elif isinstance(f, Not):
        result = everything - _sat(pm, f.sub, memo)
    elif isinstance(f, And):
        result = _sat(pm, f.left, memo) & _sat(pm, f.right, memo)
    elif isinstance(f, Or):
        result = _sat(pm, f.left, memo) | _sat(pm, f.right, memo)
    elif isinstance(f, Implies):
        result = (everything - _sat(pm, f.left, memo)) | _sat(pm, f.right, memo)
    elif isinstance(f, Temporal):
        sub = _sat(pm, f.sub, memo)
        if f.op == "EX":
            result = frozenset(v for v in range(n_states) if any(w in sub for w in succ_real(v)))
        elif f.op == "AX":
            result = frozenset(v for v in range(n_states) if all(w in sub for w in succ_real(v)))
        elif f.op == "EF":
            cur = set(sub)
            grew = True
            while grew:
                grew = False
                for v in range(n_states):
                    if v not in cur and any(w in cur for w in succ_loop(v)):
                        cur.add(v)
                        grew = True
            result = frozenset(cur)
        elif f.op == "AF":
            cur = set(sub)
            grew = True
            while grew:
                grew = False
                for v in range(n_states):
                    if v not in cur and all(w in cur for w in succ_loop(v)):
                        cur.add(v)
                        grew = True
            result = frozenset(cur)
        elif f.op == "EG":
            cur = set(sub)
            shrunk = True
            while shrunk:
                shrunk = False
                for v in list(cur):
                    if not any(w in cur for w in succ_loop(v)):
                        cur.discard(v)
                        shrunk = True
            result = frozenset(cur)
        else:  # AG
            cur = set(sub)
            shrunk = True
            while shrunk:
                shrunk = False
                for v in list(cur):
                    if not all(w in cur for w in succ_loop(v)):
                        cur.discard(v)
                        shrunk = True
            result = frozenset(cur)
    elif isinstance(f, Until):
        left = _sat(pm, f.left, memo)
        right = _sat(pm, f.right, memo)
        cur = set(right)
        grew = True
        while grew:
            grew = False
            for v in range(n_states):
                if v in cur or v not in left:
                    continue
                succs = succ_loop(v)
                ok = any(w in cur for w in succs) if f.quant == "E" else all(w in cur for w in succs)
                if ok:
                    cur.add(v)
                    grew = True
        result = frozenset(cur)
    else:
        raise FormulaError(f"not a formula: {f!r}")
    memo[key] = result
    return result


def eval_ctl(pm: ProductMachine, formula: Formula) -> bool:
    """Evaluate a CTL formula at the initial state by fixpoint labeling."""
    if pm.truncated:
        raise OracleTruncated("CTL labeling needs the complete state space")
    return 0 in _sat(pm, formula, {})


def sat_states(pm: ProductMachine, formula: Formula) -> frozenset[int]:
    if pm.truncated:
        raise OracleTruncated("CTL labeling needs the complete state space")
    return _sat(pm, formula, {})


def product_dot(pm: ProductMachine) -> str:
    """DOT rendering of the product graph (small systems only)."""
    lines = ["digraph product {", "  rankdir=LR;"]
    for v, vec in enumerate(pm.states):
        shape = ' shape=doublecircle' if v == 0 else ""
        lines.append(f'  s{v} [label="({",".join(vec)})"{shape}];')
    for v in range(len(pm.states)):
        for label, w in pm.edges[v]:
            name = label[2] if label[0] == "async" else f"{label[3]}[{label[1]}-{label[2]}]"
            lines.append(f'  s{v} -> s{w} [label="{name}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def lasso_normalize(node):
    """Continue a cut-off component at its matching ancestor."""
    return node.cutoff_target if node.cutoff else node


def configuration_steps(config: tuple) -> set[tuple]:
    """Labeled steps a node-vector configuration can fire, lasso-normalized.

    Returns {(label, next_config)}: async steps advance one component, sync
    steps advance two when the partner node's parent is the current component.
    """
    out = set()
    for pos, node in enumerate(config):
        i = pos + 1
        for ch in node.children:
            act = ch.parent_transition.action.name
            if ch.sync_partner is None:
                nxt = list(config)
                nxt[pos] = lasso_normalize(ch)
                out.add((("async", i, act), tuple(nxt)))
            else:
                partner = ch.sync_partner
                j = partner.machine
                if i < j and config[j - 1] is partner.parent:
                    nxt = list(config)
                    nxt[pos] = lasso_normalize(ch)
                    nxt[j - 1] = lasso_normalize(partner)
                    out.add((("sync", i, j, act), tuple(nxt)))
    return out


def check_bisimulation(pm: ProductMachine, sm, max_configs: int = 100_000) -> dict:
    """Test the base-vector relation between product and sum-machine behaviors.

    Walks the sum machine's configuration graph (cut-off components continue
    at their matching ancestor) and requires, for every configuration, that
    its labeled steps coincide with the product state's steps both ways, that
    proposition labels agree, and that every component's environment vector
    names a reachable product state. Violations are reported, not raised.
    """
    if pm.truncated:
        raise OracleTruncated("bisimulation testing needs the complete product")

    norm = lasso_normalize
    steps = configuration_steps

    def bases(config) -> tuple[str, ...]:
        return tuple(n.base for n in config)

    violations: list[dict] = []
    n_violations = 0

    def report(kind: str, config, detail: str) -> None:
        nonlocal n_violations
        n_violations += 1
        if len(violations) < 100:
            violations.append(
                {"kind": kind, "config": [n.name for n in config], "detail": detail}
            )

    initial = tuple(norm(u.root) for u in sm.unfoldings)
    if bases(initial) != pm.initial:
        report("initial", initial, f"{bases(initial)} differs from {pm.initial}")
    seen = {initial}
    queue = deque([initial])
    matched: set[int] = set()
    truncated = False
    while queue:
        config = queue.popleft()
        vec = bases(config)
        idx = pm.index.get(vec)
        if idx is None:
            report("unmatched-config", config, f"vector {vec} is not a product state")
            continue
        matched.add(idx)
        sum_labels = frozenset(
            (m.name, p)
            for m, node in zip(sm.spec.machines, config)
            for p in m.props_of(node.base)
        )
        if sum_labels != pm.labels_of(idx):
            report("label-mismatch", config, f"{sorted(sum_labels)} vs product labels")
        for node in config:
            if node.fvec not in pm.index:
                report(
                    "representative-unreachable",
                    config,
                    f"env vector of {node.name} projects to unreachable {node.fvec}",
                )
        sum_next = steps(config)
        sum_view = {(label, bases(c2)) for label, c2 in sum_next}
        prod_view = {(label, pm.states[dst]) for label, dst in pm.edges[idx]}
        for label, v2 in sorted(sum_view - prod_view):
            report("forward", config, f"sum fires {label} to {v2}, product cannot")
        for label, v2 in sorted(prod_view - sum_view):
            report("backward", config, f"product fires {label} to {v2}, sum cannot")
        for _, c2 in sum_next:
            if c2 not in seen:
                if len(seen) >= max_configs:
                    truncated = True
                    break
                seen.add(c2)
                queue.append(c2)
        if truncated:
            break
    if not truncated and len(matched) != len(pm.states):
        missing = len(pm.states) - len(matched)
        report("coverage", initial, f"{missing} product states never matched")
    return {
        "ok": n_violations == 0 and not truncated,
        "configs": len(seen),
        "classes": len(matched),
        "violations": violations,
        "n_violations": n_violations,
        "truncated": truncated,
    }
