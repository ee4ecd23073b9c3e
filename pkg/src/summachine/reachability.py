"""Global reachability via per-machine searches plus concurrency certification."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

from .spec_model import SystemSpec
from .unfolding import Node, SumMachine, _is_local_anc_or_self

CANDIDATE_CAP = 64


@dataclass(frozen=True)
class ReachQuery:
    """Partial target vector: machine index -> wanted base state."""

    targets: tuple[tuple[int, str], ...]

    @classmethod
    def of(cls, targets: dict[int, str]) -> "ReachQuery":
        return cls(tuple(sorted(targets.items())))

    @classmethod
    def from_names(cls, spec: SystemSpec, by_name: dict[str, str]) -> "ReachQuery":
        targets = {}
        for machine_name, state in by_name.items():
            m = spec.machine_named(machine_name)
            if state not in m.states:
                raise ValueError(f"machine {machine_name} has no state {state!r}")
            targets[m.index] = state
        return cls.of(targets)

    def as_dict(self) -> dict[int, str]:
        return dict(self.targets)

    def validate(self, spec: SystemSpec) -> None:
        for idx, state in self.targets:
            if not 1 <= idx <= spec.n:
                raise ValueError(f"machine index {idx} out of range")
            if state not in spec.machine(idx).states:
                raise ValueError(f"machine {spec.machine(idx).name} has no state {state!r}")


@dataclass
class Configuration:
    """One node per (constrained) machine; meaningful when pairwise concurrent."""

    components: dict[int, Node]

    def machines(self) -> list[int]:
        return sorted(self.components)

    def node(self, index: int) -> Node:
        return self.components[index]

    def bases_by_name(self, spec: SystemSpec) -> dict[str, str]:
        return {spec.machine(i).name: n.base for i, n in sorted(self.components.items())}

    def nodes_by_name(self, spec: SystemSpec) -> dict[str, str]:
        return {spec.machine(i).name: n.name for i, n in sorted(self.components.items())}

    def pairs(self) -> list[tuple[Node, Node]]:
        ms = self.machines()
        return [
            (self.components[a], self.components[b])
            for pos, a in enumerate(ms)
            for b in ms[pos + 1 :]
        ]


@dataclass
class CandidateMatrix:
    """Per constrained machine, the local nodes matching the queried state."""

    machines: list[int]  # ascending
    candidates: dict[int, list[Node]]
    capped: bool = False


@dataclass
class Verdict:
    reachable: bool
    witness: Configuration | None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class Trace:
    """Interleaving: vectors[0] is initial; labels[i] fires vectors[i] -> vectors[i+1]."""

    vectors: list[tuple[str, ...]]
    labels: list[tuple]


def local_search(sm: SumMachine, i: int, target: str) -> list[Node]:
    """All nodes of unfolding i with the queried base, in discovery order."""
    u = sm.unfolding(i)
    if target not in u.machine.states:
        raise ValueError(f"machine {u.machine.name} has no state {target!r}")
    return [n for n in u.nodes if n.base == target]


def co_fast_nodes(a: Node, b: Node) -> tuple[bool, int]:
    """Two-anchor concurrency test by parent walks, with the hop count."""
    steps = 0
    ok = True
    for top, start in ((b.env[a.machine - 1], a), (a.env[b.machine - 1], b)):
        cur = start
        while cur.depth > top.depth:
            cur = cur.parent
            steps += 1
        if cur is not top:
            ok = False
    return ok, steps


class _CoCache:
    """Memoized co_fast over node pairs; each distinct pair costs one walk."""

    def __init__(self, counters: dict):
        self.counters = counters
        self.cache: dict[tuple[int, int], bool] = {}

    def co(self, a: Node, b: Node, counter: str) -> bool:
        key = (a.gidx, b.gidx) if a.gidx <= b.gidx else (b.gidx, a.gidx)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        ok, steps = co_fast_nodes(a, b)
        self.counters[counter] += 1
        if steps > self.counters["steps_max"]:
            self.counters["steps_max"] = steps
        self.cache[key] = ok
        return ok


def _fresh_counters() -> dict:
    return {
        "pairwise_checks": 0,
        "chain_checks": 0,
        "validation_checks": 0,
        "chain_disagreements": 0,
        "steps_max": 0,
    }


def _pairwise_assign(matrix: CandidateMatrix, cache: _CoCache) -> list[Node] | None:
    order = matrix.machines
    assignment: list[Node] = []

    def extend(t: int) -> bool:
        if t == len(order):
            return True
        for cand in matrix.candidates[order[t]]:
            if all(cache.co(prev, cand, "pairwise_checks") for prev in assignment):
                assignment.append(cand)
                if extend(t + 1):
                    return True
                assignment.pop()
        return False

    return assignment if extend(0) else None


def _chain_assignments(matrix: CandidateMatrix, cache: _CoCache) -> Iterator[list[Node]]:
    """Assignments satisfying co on consecutive machine pairs only, in order."""
    order = matrix.machines
    dead: list[set[int]] = [set() for _ in order]
    assignment: list[Node] = []

    def extend(t: int) -> Iterator[list[Node]]:
        if t == len(order):
            yield list(assignment)
            return
        found = False
        for cand in matrix.candidates[order[t]]:
            if cand.gidx in dead[t]:
                continue
            if assignment and not cache.co(assignment[-1], cand, "chain_checks"):
                continue
            assignment.append(cand)
            for full in extend(t + 1):
                found = True
                yield full
            assignment.pop()
            if not found:
                dead[t].add(cand.gidx)
        return

    yield from extend(0)


def certify_concurrent(
    matrix: CandidateMatrix, mode: str = "pairwise", counters: dict | None = None
) -> Configuration | None:
    """Find one candidate per machine such that the required co tests pass."""
    if mode not in ("pairwise", "chain"):
        raise ValueError(f"unknown certification mode: {mode!r}")
    if counters is None:
        counters = _fresh_counters()
    if any(not matrix.candidates[m] for m in matrix.machines):
        return None
    cache = _CoCache(counters)
    if mode == "pairwise":
        chosen = _pairwise_assign(matrix, cache)
        if chosen is None:
            return None
        return Configuration(dict(zip(matrix.machines, chosen)))
    # chain mode proposes; the full pairwise test stays authoritative
    for chosen in _chain_assignments(matrix, cache):
        valid = all(
            cache.co(chosen[a], chosen[b], "validation_checks")
            for a in range(len(chosen))
            for b in range(a + 1, len(chosen))
        )
        if valid:
            return Configuration(dict(zip(matrix.machines, chosen)))
        counters["chain_disagreements"] += 1
    return None


def global_reachable(
    sm: SumMachine,
    q: ReachQuery,
    mode: str = "pairwise",
    parallel_search: bool = False,
) -> Verdict:
    """Decide whether a (partial) state vector is globally reachable."""
    q.validate(sm.spec)
    wanted = q.as_dict()
    machines = sorted(wanted)
    counters = _fresh_counters()
    diagnostics: dict = {
        "mode": mode,
        "parallel_search": parallel_search,
        "local_matches": {},
        "k_per_machine": {},
        "k_global": 0,
        "candidates_capped": False,
    }

    if parallel_search and len(machines) > 1:
        with ThreadPoolExecutor(max_workers=len(machines)) as pool:
            found = list(pool.map(lambda i: local_search(sm, i, wanted[i]), machines))
    else:
        found = [local_search(sm, i, wanted[i]) for i in machines]

    candidates: dict[int, list[Node]] = {}
    for i, nodes in zip(machines, found):
        diagnostics["local_matches"][sm.spec.machine(i).name] = len(nodes)
        if len(nodes) > CANDIDATE_CAP:
            nodes = nodes[:CANDIDATE_CAP]
            diagnostics["candidates_capped"] = True
        diagnostics["k_per_machine"][sm.spec.machine(i).name] = len(nodes)
        candidates[i] = nodes
    diagnostics["k_global"] = max(diagnostics["k_per_machine"].values(), default=0)

    if any(not candidates[i] for i in machines):
        diagnostics.update(counters)
        return Verdict(reachable=False, witness=None, diagnostics=diagnostics)

    matrix = CandidateMatrix(machines=machines, candidates=candidates)
    witness = certify_concurrent(matrix, mode=mode, counters=counters)
    diagnostics.update(counters)
    return Verdict(reachable=witness is not None, witness=witness, diagnostics=diagnostics)


def _root_path(node: Node) -> list[Node]:
    path = []
    cur: Node | None = node
    while cur is not None:
        path.append(cur)
        cur = cur.parent
    path.reverse()
    return path


def materialize_configuration(sm: SumMachine, c: Configuration) -> Trace:
    """Replay one interleaving from the initial vector to the configuration."""
    for a, b in c.pairs():
        ok, _ = co_fast_nodes(a, b)
        if not ok:
            raise ValueError(
                f"components {a.name} (machine {a.machine}) and {b.name} "
                f"(machine {b.machine}) are not concurrent"
            )
    # per machine, the deepest history any component carries
    tips: dict[int, Node] = {}
    for k in range(1, sm.spec.n + 1):
        best = sm.unfolding(k).root
        for comp in c.components.values():
            e = comp.env[k - 1]
            if _is_local_anc_or_self(best, e):
                best = e
            elif not _is_local_anc_or_self(e, best):
                raise ValueError(
                    f"components carry conflicting histories in machine {k}"
                )
        tips[k] = best

    paths = {k: _root_path(tips[k]) for k in tips}
    ptr = {k: 0 for k in paths}
    vec = [paths[k][0].base for k in sorted(paths)]
    vectors = [tuple(vec)]
    labels: list[tuple] = []
    remaining = sum(len(p) - 1 for p in paths.values())
    while remaining:
        fired = False
        for k in sorted(paths):
            if ptr[k] + 1 >= len(paths[k]):
                continue
            nxt = paths[k][ptr[k] + 1]
            action = nxt.parent_transition.action
            if action.is_sync:
                partner = nxt.sync_partner
                j = partner.machine
                if ptr[j] + 1 < len(paths[j]) and paths[j][ptr[j] + 1] is partner:
                    ptr[k] += 1
                    ptr[j] += 1
                    vec[k - 1] = nxt.base
                    vec[j - 1] = partner.base
                    lo, hi = min(k, j), max(k, j)
                    labels.append(("sync", lo, hi, action.name))
                    vectors.append(tuple(vec))
                    remaining -= 2
                    fired = True
                    break
            else:
                ptr[k] += 1
                vec[k - 1] = nxt.base
                labels.append(("async", k, action.name))
                vectors.append(tuple(vec))
                remaining -= 1
                fired = True
                break
        if not fired:
            raise RuntimeError("no transition enabled while replaying the configuration")
    return Trace(vectors=vectors, labels=labels)


def _stuck_vector(spec: SystemSpec, vec: tuple[str, ...]) -> bool:
    """No machine can move from vec: no async exit, no mutually enabled rendezvous."""
    for i, base in enumerate(vec, start=1):
        for t in spec.machine(i).transitions_from(base):
            j = t.action.partner
            if j is None:
                return False
            reciprocal = any(
                u.action.partner == i and u.action.name == t.action.name
                for u in spec.machine(j).transitions_from(vec[j - 1])
            )
            if reciprocal:
                return False
    return True


def list_deadlocks(sm: SumMachine) -> list[Configuration]:
    """Reachable state vectors from which nothing can fire, with witnesses.

    Candidates are vectors of states that lack async exits (a machine with an
    async transition always moves); each statically stuck candidate is then
    certified reachable on the sum machine.
    """
    spec = sm.spec
    per_machine = [
        [b for b in m.states if not any(t.action.partner is None for t in m.transitions_from(b))]
        for m in spec.machines
    ]
    out = []
    for vec in product(*per_machine):
        waiting = any(spec.machine(i).transitions_from(b) for i, b in enumerate(vec, start=1))
        if not waiting or not _stuck_vector(spec, vec):
            continue
        v = global_reachable(sm, ReachQuery.of({i: b for i, b in enumerate(vec, start=1)}))
        if v.reachable:
            assert v.witness is not None
            out.append(v.witness)
    return out
