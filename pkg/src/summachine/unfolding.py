"""Construction of the sum machine: one environment-carrying tree per machine.

Each machine is simulated in context: a node is one entry of a CFSM state
(base, instance). Async transitions extend the owning tree alone; sync
transitions extend two trees with a paired child each. Every node carries an
environment vector env — for each machine k, the latest machine-k node that
must have been entered before this node can be entered (env of the node's own
machine is the node itself). Growth stops at cut-off nodes, whose fvec
(the base-name projection of env) repeats one of their local ancestors':
from there behavior repeats, which the cut-off records as a lasso target.

Rendezvous matching: an offer (node, sync transition) stays open for the
whole build; two reciprocal offers produce a child pair iff the offering
nodes are concurrent — their envs are coordinatewise locally comparable and
neither node strictly precedes the other's view of its machine. Both facts
are decided by parent walks on the offering nodes' frozen pasts, so match
order never changes the outcome and sequential and parallel modes build the
same node set.
"""

from __future__ import annotations

import os
import threading
from collections import deque
from dataclasses import dataclass, field

from .spec_model import CfsmSpec, CfsmTransition, SystemSpec


class IncomparableError(ValueError):
    """Two same-machine nodes sit on conflicting branches (no desc exists)."""


class LimitExceeded(Exception):
    def __init__(self, machine: str, what: str, limit: int):
        super().__init__(f"machine {machine}: {what} limit {limit} exceeded")
        self.machine = machine
        self.what = what
        self.limit = limit


@dataclass(frozen=True)
class Limits:
    max_nodes: int = 100_000  # per machine
    max_depth: int = 500


@dataclass(eq=False)
class Node:
    machine: int  # 1-based machine index
    base: str
    kind: str  # "initial" | "async_output" | "sync_output"
    parent: Node | None = None
    parent_transition: CfsmTransition | None = None
    sync_partner: Node | None = None
    env: tuple[Node, ...] = ()
    fvec: tuple[str, ...] = ()
    depth: int = 0
    cutoff: bool = False
    cutoff_target: Node | None = None
    dead: bool = False
    children: list[Node] = field(default_factory=list)
    uid: int = -1  # creation order, builder-assigned
    instance: int = -1  # canonical, assigned at finalize
    ordinal: int = -1  # canonical position within the machine's tree
    gidx: int = -1  # canonical global index (machine-major)

    def __repr__(self):
        ins = self.instance if self.instance >= 0 else "?"
        return f"<{self.base}.{ins} m{self.machine}>"

    @property
    def name(self) -> str:
        return f"{self.base}.{self.instance}"

    def local_ancestors(self):
        """Strict ancestors in the owning tree, nearest first."""
        node = self.parent
        while node is not None:
            yield node
            node = node.parent


def _is_local_anc_or_self(a: Node, b: Node) -> bool:
    """True iff a lies on b's root path (a occurs at or before b locally)."""
    if a.machine != b.machine:
        return False
    node = b
    while node is not None and node.depth >= a.depth:
        if node is a:
            return True
        node = node.parent
    return False


def desc(a: Node, b: Node) -> Node:
    """The later of two locally ordered nodes; error if they are in conflict."""
    if a.machine != b.machine:
        raise ValueError("desc needs two nodes of the same machine")
    if _is_local_anc_or_self(a, b):
        return b
    if _is_local_anc_or_self(b, a):
        return a
    raise IncomparableError(f"{a!r} and {b!r} are on conflicting branches")


def fvec_of(env: tuple[Node, ...]) -> tuple[str, ...]:
    """Project an environment vector to base state names (instances dropped)."""
    return tuple(node.base for node in env)


def is_sync_compatible(s_i: Node, s_j: Node) -> bool:
    """Coordinatewise local comparability of the two environment vectors."""
    for a, b in zip(s_i.env, s_j.env):
        if a is b:
            continue
        if not (_is_local_anc_or_self(a, b) or _is_local_anc_or_self(b, a)):
            return False
    return True


def _concurrent_now(s_i: Node, s_j: Node) -> bool:
    """Can s_i and s_j be simultaneously current? Decides rendezvous matching.

    Beyond coordinatewise comparability, each node must not lie strictly
    before the other's view of its machine: env_i(s_j) must be an ancestor-
    or-self of s_i (anything below s_i's own position would mean s_i already
    moved on before s_j was enterable), and symmetrically.
    """
    if not is_sync_compatible(s_i, s_j):
        return False
    return _is_local_anc_or_self(s_j.env[s_i.machine - 1], s_i) and _is_local_anc_or_self(
        s_i.env[s_j.machine - 1], s_j
    )


def gen_next_async(s: Node, t: CfsmTransition) -> Node:
    """Apply a local transition: fresh child inheriting env except its own slot."""
    if t.action.partner is not None:
        raise ValueError(f"gen_next_async got a sync transition {t.action.name!r}")
    if t.source != s.base:
        raise ValueError(f"transition source {t.source!r} does not match node base {s.base!r}")
    child = Node(
        machine=s.machine,
        base=t.dest,
        kind="async_output",
        parent=s,
        parent_transition=t,
        depth=s.depth + 1,
    )
    i = s.machine - 1
    child.env = s.env[:i] + (child,) + s.env[i + 1 :]
    child.fvec = fvec_of(child.env)
    s.children.append(child)
    return child


def gen_next_sync(s_i: Node, s_j: Node, t_i: CfsmTransition, t_j: CfsmTransition) -> tuple[Node, Node]:
    """Fire a rendezvous: paired children sharing one merged environment.

    Coordinates outside the two participants merge by desc — the later of the
    two requirements; an incomparable coordinate raises and means the pair
    must not rendezvous.
    """
    if t_i.action.partner != s_j.machine or t_j.action.partner != s_i.machine:
        raise ValueError("transitions are not reciprocal for these machines")
    if t_i.action.name != t_j.action.name:
        raise ValueError(f"action names differ: {t_i.action.name!r} vs {t_j.action.name!r}")
    if t_i.source != s_i.base or t_j.source != s_j.base:
        raise ValueError("transition sources do not match node bases")
    if s_i.machine == s_j.machine:
        raise ValueError("rendezvous needs two distinct machines")
    child_i = Node(
        machine=s_i.machine, base=t_i.dest, kind="sync_output",
        parent=s_i, parent_transition=t_i, depth=s_i.depth + 1,
    )
    child_j = Node(
        machine=s_j.machine, base=t_j.dest, kind="sync_output",
        parent=s_j, parent_transition=t_j, depth=s_j.depth + 1,
    )
    env = []
    for k in range(len(s_i.env)):
        if k == s_i.machine - 1:
            env.append(child_i)
        elif k == s_j.machine - 1:
            env.append(child_j)
        else:
            env.append(desc(s_i.env[k], s_j.env[k]))
    child_i.env = child_j.env = tuple(env)
    child_i.fvec = child_j.fvec = fvec_of(child_i.env)
    child_i.sync_partner = child_j
    child_j.sync_partner = child_i
    s_i.children.append(child_i)
    s_j.children.append(child_j)
    return child_i, child_j


def _find_cutoff_target(s: Node) -> Node | None:
    for anc in s.local_ancestors():
        if anc.fvec == s.fvec:
            return anc
    return None


def is_cutoff(s: Node, u: "Unfolding | None" = None) -> bool:
    """True iff some strict local ancestor has the same fvec (behavior repeats)."""
    return _find_cutoff_target(s) is not None


@dataclass
class Unfolding:
    machine: CfsmSpec
    root: Node
    nodes: list[Node]  # canonical order: preorder, parent before child

    @property
    def index(self) -> int:
        return self.machine.index

    @property
    def local_edges(self) -> list[tuple[Node, str, Node]]:
        return [
            (n.parent, n.parent_transition.action.name, n)
            for n in self.nodes
            if n.parent is not None
        ]

    @property
    def sync_edges(self) -> list[tuple[Node, Node]]:
        """Pairs (own node, partner node), including the initial nodes' links."""
        out = []
        for n in self.nodes:
            if n.sync_partner is not None:
                out.append((n, n.sync_partner))
            elif n.kind == "initial":
                out.extend((n, r) for r in n.env if r is not n)
        return out

    def node_named(self, base: str, instance: int) -> Node:
        for n in self.nodes:
            if n.base == base and n.instance == instance:
                return n
        raise KeyError(f"no node {base}.{instance} in machine {self.machine.name}")

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes)

    def cutoffs(self) -> list[Node]:
        return [n for n in self.nodes if n.cutoff]

    def dead_leaves(self) -> list[Node]:
        return [n for n in self.nodes if n.dead]


@dataclass
class SumMachine:
    spec: SystemSpec
    unfoldings: list[Unfolding]
    sync_pairs: list[tuple[Node, Node]]  # canonical, machine_u < machine_v
    mode: str
    limits: Limits
    stats: dict

    def unfolding(self, index: int) -> Unfolding:
        """1-based machine index."""
        return self.unfoldings[index - 1]

    def unfolding_named(self, name: str) -> Unfolding:
        return self.unfoldings[self.spec.machine_named(name).index - 1]

    def all_nodes(self) -> list[Node]:
        """Machine-major canonical order; position equals Node.gidx."""
        out = []
        for u in self.unfoldings:
            out.extend(u.nodes)
        return out

    def initial_configuration(self) -> dict[int, Node]:
        return {u.index: u.root for u in self.unfoldings}


class _Builder:
    def __init__(self, spec: SystemSpec, limits: Limits):
        self.spec = spec
        self.limits = limits
        self.nodes_by_machine: list[list[Node]] = [[] for _ in spec.machines]
        self.offers: dict[tuple[int, int, str], list[tuple[Node, CfsmTransition]]] = {}
        self.matched: set[tuple] = set()
        self.sync_pairs: list[tuple[Node, Node]] = []
        self.uid = 0

    def _register(self, node: Node):
        if node.depth > self.limits.max_depth:
            raise LimitExceeded(self.spec.machine(node.machine).name, "depth", self.limits.max_depth)
        own = self.nodes_by_machine[node.machine - 1]
        if len(own) >= self.limits.max_nodes:
            raise LimitExceeded(self.spec.machine(node.machine).name, "node", self.limits.max_nodes)
        node.uid = self.uid
        self.uid += 1
        own.append(node)

    def make_roots(self) -> list[Node]:
        roots = [Node(machine=m.index, base=m.initial, kind="initial") for m in self.spec.machines]
        env = tuple(roots)
        for r in roots:
            r.env = env
            r.fvec = fvec_of(env)
            self._register(r)
        return roots

    def expand(self, node: Node) -> list[Node]:
        """Process one node: mark cut-off, or apply transitions and match offers."""
        target = _find_cutoff_target(node)
        if target is not None:
            node.cutoff = True
            node.cutoff_target = target
            return []
        created: list[Node] = []
        machine = self.spec.machine(node.machine)
        for t in machine.transitions_from(node.base):
            if t.action.partner is None:
                child = gen_next_async(node, t)
                self._register(child)
                created.append(child)
            else:
                created.extend(self._offer_and_match(node, t))
        return created

    def _offer_and_match(self, node: Node, t: CfsmTransition) -> list[Node]:
        i, j = node.machine, t.action.partner
        self.offers.setdefault((i, j, t.action.name), []).append((node, t))
        created = []
        for other, t2 in self.offers.get((j, i, t.action.name), []):
            if t2.action.partner != i:
                continue
            key = self._match_key(node, t, other, t2)
            if key in self.matched:
                continue
            if not _concurrent_now(node, other):
                continue
            self.matched.add(key)
            lo, hi = (node, other) if i < j else (other, node)
            t_lo, t_hi = (t, t2) if i < j else (t2, t)
            child_lo, child_hi = gen_next_sync(lo, hi, t_lo, t_hi)
            self._register(child_lo)
            self._register(child_hi)
            self.sync_pairs.append((child_lo, child_hi))
            created.extend((child_lo, child_hi))
        return created

    def _match_key(self, a: Node, ta: CfsmTransition, b: Node, tb: CfsmTransition):
        if a.machine > b.machine:
            a, ta, b, tb = b, tb, a, ta
        return (a.uid, ta, b.uid, tb)

    # -- canonical form ------------------------------------------------

    def finalize(self, mode: str) -> SumMachine:
        """Name nodes independently of construction order.

        Every node gets a path key: the sequence of edge descriptors from its
        root, where a sync edge descriptor embeds the partner parent's own
        path key. Keys are construction-order independent, so sorting by key
        yields the same preorder whatever order matching happened in.
        """
        all_nodes = sorted(
            (n for machine_nodes in self.nodes_by_machine for n in machine_nodes),
            key=lambda n: n.uid,
        )
        key: dict[int, tuple] = {}
        for n in all_nodes:  # uid order: parents and partner parents come first
            if n.parent is None:
                key[n.uid] = ()
                continue
            t = n.parent_transition
            if n.sync_partner is None:
                edge = (t.action.name, n.base, 0, (), "")
            else:
                p = n.sync_partner
                edge = (t.action.name, n.base, p.machine, key[p.parent.uid], p.base)
            key[n.uid] = key[n.parent.uid] + (edge,)

        unfoldings = []
        offset = 0
        for m, machine_nodes in zip(self.spec.machines, self.nodes_by_machine):
            ordered = sorted(machine_nodes, key=lambda n: (key[n.uid], n.uid))
            counters: dict[str, int] = {}
            for pos, n in enumerate(ordered):
                n.ordinal = pos
                n.gidx = offset + pos
                n.instance = counters.get(n.base, 0)
                counters[n.base] = n.instance + 1
                n.children.sort(key=lambda c: key[c.uid])
                if not n.cutoff and not n.children and m.transitions_from(n.base):
                    n.dead = True
            offset += len(ordered)
            unfoldings.append(Unfolding(machine=m, root=ordered[0], nodes=ordered))

        roots = [u.root for u in unfoldings]
        ring = [(roots[i], roots[j]) for i in range(len(roots)) for j in range(i + 1, len(roots))]
        pairs = ring + sorted(self.sync_pairs, key=lambda p: (p[0].gidx, p[1].gidx))

        n_f = max(len(m.states) for m in self.spec.machines)
        per_machine = [
            {
                "machine": u.index,
                "name": u.machine.name,
                "nodes": len(u.nodes),
                "cutoffs": len(u.cutoffs()),
                "dead": len(u.dead_leaves()),
                "depth": u.depth,
            }
            for u in unfoldings
        ]
        stats = {
            "nodes": sum(p["nodes"] for p in per_machine),
            "cutoffs": sum(p["cutoffs"] for p in per_machine),
            "dead": sum(p["dead"] for p in per_machine),
            "sync_pairs": len(pairs),
            "d_measured": max(p["nodes"] / n_f for p in per_machine),
            "per_machine": per_machine,
        }
        return SumMachine(
            spec=self.spec, unfoldings=unfoldings, sync_pairs=pairs,
            mode=mode, limits=self.limits, stats=stats,
        )


def _run_sequential(builder: _Builder) -> None:
    queue = deque(builder.make_roots())
    while queue:
        queue.extend(builder.expand(queue.popleft()))


def _run_parallel(builder: _Builder, threads: int) -> None:
    """One worker per machine (capped), blocking on a shared waitlist.

    Matching mutates shared offer tables, so expansion runs under one lock;
    the workers' value is honest queue semantics plus quiescence detection,
    and the result is node-identical to sequential mode by construction.
    """
    n = builder.spec.n
    workers = max(1, min(threads, n))
    queues: dict[int, deque] = {i: deque() for i in range(1, n + 1)}
    cv = threading.Condition()
    state = {"pending": 0, "error": None}
    assigned: list[list[int]] = [[] for _ in range(workers)]
    for i in range(1, n + 1):
        assigned[(i - 1) % workers].append(i)

    def enqueue(nodes):
        for node in nodes:
            queues[node.machine].append(node)
        state["pending"] += len(nodes)

    def work(machines: list[int]):
        while True:
            with cv:
                node = None
                while node is None:
                    if state["error"] is not None or state["pending"] == 0:
                        return
                    for i in machines:
                        if queues[i]:
                            node = queues[i].popleft()
                            break
                    else:
                        cv.wait()
                try:
                    created = builder.expand(node)
                except Exception as exc:  # propagate limit errors to the caller
                    state["error"] = exc
                    cv.notify_all()
                    return
                enqueue(created)
                state["pending"] -= 1
                cv.notify_all()

    with cv:
        enqueue(builder.make_roots())
    pool = [threading.Thread(target=work, args=(assigned[w],)) for w in range(workers)]
    for th in pool:
        th.start()
    for th in pool:
        th.join()
    if state["error"] is not None:
        raise state["error"]


def unfold(
    spec: SystemSpec,
    limits: Limits | None = None,
    mode: str = "sequential",
    threads: int | None = None,
) -> SumMachine:
    """Build the sum machine for a system.

    mode is "sequential" or "parallel"; both produce byte-identical canonical
    results. threads caps parallel workers (default: one per machine, further
    capped by the SUMMACHINE_THREADS environment variable).
    """
    if mode not in ("sequential", "parallel"):
        raise ValueError(f"unknown mode {mode!r}")
    limits = limits or Limits()
    builder = _Builder(spec, limits)
    if mode == "sequential":
        _run_sequential(builder)
    else:
        if threads is None:
            threads = spec.n
        env_cap = os.environ.get("SUMMACHINE_THREADS")
        if env_cap and env_cap.isdigit() and int(env_cap) > 0:
            threads = min(threads, int(env_cap))
        _run_parallel(builder, threads)
    return builder.finalize(mode)
