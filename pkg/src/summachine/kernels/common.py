"""Flat array preparation shared by the pure and compiled relation kernels."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from ..unfolding import SumMachine

IDENTITY, SEQ_FORWARD, SEQ_BACKWARD, CONF, CO = range(5)
UNCOVERED = -1


@dataclass
class KernelData:
    """A sum machine flattened to integer arrays indexed by Node.gidx."""

    n_machines: int
    n_nodes: int
    machine: list[int]  # 0-based machine index per node
    parent: list[int]  # local parent gidx, -1 at roots
    depth: list[int]
    tin: list[int]  # preorder interval [tin, tout) within the own tree
    tout: list[int]
    env: list[int]  # flat n_nodes * n_machines environment gidx
    child_start: list[int]  # CSR local children, canonical order
    child_list: list[int]
    class_id: list[int]  # simultaneity class per node
    n_classes: int
    class_member: list[int]  # flat n_classes * n_machines, gidx or -1
    class_child_start: list[int]  # CSR class-DAG edges, deduped
    class_child_list: list[int]
    class_parent_start: list[int]
    class_parent_list: list[int]
    topo: list[int]  # topological order of classes, sources first


def _csr(n: int, edges: list[tuple[int, int]]) -> tuple[list[int], list[int]]:
    start = [0] * (n + 1)
    for a, _ in edges:
        start[a + 1] += 1
    for i in range(n):
        start[i + 1] += start[i]
    out = [0] * len(edges)
    fill = start[:]
    for a, b in sorted(edges):
        out[fill[a]] = b
        fill[a] += 1
    return start, out


def build_kernel_data(sm: SumMachine) -> KernelData:
    """Flatten a sum machine into kernel arrays (O(total nodes) memory)."""
    nodes = sm.all_nodes()
    n = sm.spec.n
    big = len(nodes)
    machine = [u.index - 1 for u in sm.unfoldings for _ in u.nodes]
    parent = [n_.parent.gidx if n_.parent is not None else -1 for n_ in nodes]
    depth = [n_.depth for n_ in nodes]
    env = [0] * (big * n)
    for g, node in enumerate(nodes):
        for k, e in enumerate(node.env):
            env[g * n + k] = e.gidx

    # preorder intervals per local tree, from explicit DFS over children
    tin = [0] * big
    tout = [0] * big
    for u in sm.unfoldings:
        clock = 0
        stack = [(u.root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                tout[node.gidx] = clock
                continue
            tin[node.gidx] = clock
            clock += 1
            stack.append((node, True))
            for child in reversed(node.children):
                stack.append((child, False))

    child_edges = [(node.gidx, c.gidx) for node in nodes for c in node.children]
    child_start, child_list = _csr(big, child_edges)

    # simultaneity classes: union-find over partner links only — every
    # tree edge strictly advances the environment vector, so causality
    # cycles can only run along partner/root links
    uf = list(range(big))

    def find(x: int) -> int:
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for a, b in sm.sync_pairs:
        ra, rb = find(a.gidx), find(b.gidx)
        if ra != rb:
            uf[max(ra, rb)] = min(ra, rb)

    class_id = [0] * big
    order: dict[int, int] = {}
    for g in range(big):
        r = find(g)
        if r not in order:
            order[r] = len(order)
        class_id[g] = order[r]
    n_classes = len(order)

    class_member = [-1] * (n_classes * n)
    for g in range(big):
        slot = class_id[g] * n + machine[g]
        assert class_member[slot] == -1, "one member per machine per class"
        class_member[slot] = g

    dag = {(class_id[a], class_id[b]) for a, b in child_edges if class_id[a] != class_id[b]}
    class_child_start, class_child_list = _csr(n_classes, sorted(dag))
    class_parent_start, class_parent_list = _csr(n_classes, sorted((b, a) for a, b in dag))

    indeg = [class_parent_start[c + 1] - class_parent_start[c] for c in range(n_classes)]
    ready = [c for c in range(n_classes) if indeg[c] == 0]
    heapq.heapify(ready)
    topo = []
    while ready:
        c = heapq.heappop(ready)
        topo.append(c)
        for i in range(class_child_start[c], class_child_start[c + 1]):
            child = class_child_list[i]
            indeg[child] -= 1
            if indeg[child] == 0:
                heapq.heappush(ready, child)
    if len(topo) != n_classes:
        raise ValueError("causality graph has an unexpected cycle through tree edges")

    return KernelData(
        n_machines=n,
        n_nodes=big,
        machine=machine,
        parent=parent,
        depth=depth,
        tin=tin,
        tout=tout,
        env=env,
        child_start=child_start,
        child_list=child_list,
        class_id=class_id,
        n_classes=n_classes,
        class_member=class_member,
        class_child_start=class_child_start,
        class_child_list=class_child_list,
        class_parent_start=class_parent_start,
        class_parent_list=class_parent_list,
        topo=topo,
    )
