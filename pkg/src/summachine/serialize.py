"""Canonical JSON and DOT renderings of sum machines.

JSON is the persistence contract: deterministic byte-for-byte for a given
structure (sorted keys, fixed separators, no volatile fields), reloadable
without loss. DOT is one digraph per machine tree for eyeballing.
"""

from __future__ import annotations

import json

from .spec_model import ActionLabel, CfsmSpec, CfsmTransition, SystemSpec
from .unfolding import Limits, Node, SumMachine, Unfolding

SCHEMA = "summachine/v1"


def system_to_dict(spec: SystemSpec) -> dict:
    return {
        "name": spec.name,
        "machines": [
            {
                "name": m.name,
                "init": m.initial,
                "states": list(m.states),
                "trans": [
                    {
                        "src": t.source,
                        "dst": t.dest,
                        "action": t.action.name,
                        "with": spec.machines[t.action.partner - 1].name
                        if t.action.partner
                        else None,
                    }
                    for t in m.transitions
                ],
                "labels": {s: sorted(ps) for s, ps in sorted(m.labels.items())},
            }
            for m in spec.machines
        ],
    }


def system_from_dict(d: dict) -> SystemSpec:
    name_to_idx = {m["name"]: i + 1 for i, m in enumerate(d["machines"])}
    machines = []
    for i, md in enumerate(d["machines"], start=1):
        machines.append(
            CfsmSpec(
                index=i,
                name=md["name"],
                states=tuple(md["states"]),
                initial=md["init"],
                transitions=tuple(
                    CfsmTransition(
                        td["src"],
                        ActionLabel(
                            td["action"],
                            name_to_idx[td["with"]] if td.get("with") else None,
                        ),
                        td["dst"],
                    )
                    for td in md["trans"]
                ),
                labels={s: frozenset(ps) for s, ps in md.get("labels", {}).items()},
            )
        )
    return SystemSpec(name=d["name"], machines=tuple(machines))


def sum_to_dict(sm: SumMachine, seed: int | None = None) -> dict:
    """Whole sum machine as a JSON-ready dict; node references are ordinals."""

    def node_ref(n: Node) -> list:
        return [n.machine, n.ordinal]

    unf = []
    for u in sm.unfoldings:
        nodes = []
        for n in u.nodes:
            nodes.append(
                {
                    "base": n.base,
                    "instance": n.instance,
                    "kind": n.kind,
                    "parent": n.parent.ordinal if n.parent else None,
                    "action": n.parent_transition.action.name if n.parent_transition else None,
                    "sync": node_ref(n.sync_partner) if n.sync_partner else None,
                    "env": [e.ordinal for e in n.env],
                    "cutoff": n.cutoff,
                    "lasso": n.cutoff_target.ordinal if n.cutoff_target else None,
                    "dead": n.dead,
                }
            )
        unf.append({"machine": u.index, "name": u.machine.name, "nodes": nodes})
    return {
        "schema": SCHEMA,
        "kind": "sum_machine",
        "seed": seed,
        "limits": {"max_nodes": sm.limits.max_nodes, "max_depth": sm.limits.max_depth},
        "system": system_to_dict(sm.spec),
        "unfoldings": unf,
        "stats": sm.stats,
    }


def dumps_canonical(d: dict) -> str:
    return json.dumps(d, sort_keys=True, indent=1) + "\n"


def sum_to_json(sm: SumMachine, seed: int | None = None) -> str:
    return dumps_canonical(sum_to_dict(sm, seed))


def sum_from_dict(d: dict) -> SumMachine:
    if d.get("schema") != SCHEMA or d.get("kind") != "sum_machine":
        raise ValueError("not a sum_machine document")
    spec = system_from_dict(d["system"])
    per_machine_nodes: list[list[Node]] = []
    for u, m in zip(d["unfoldings"], spec.machines):
        nodes = []
        for pos, nd in enumerate(u["nodes"]):
            node = Node(machine=m.index, base=nd["base"], kind=nd["kind"])
            node.instance = nd["instance"]
            node.ordinal = pos
            node.cutoff = nd["cutoff"]
            node.dead = nd["dead"]
            nodes.append(node)
        per_machine_nodes.append(nodes)

    by_trans = [
        {(t.source, t.action.name, t.dest): t for t in m.transitions} for m in spec.machines
    ]
    offset = 0
    for u, m, nodes in zip(d["unfoldings"], spec.machines, per_machine_nodes):
        for node, nd in zip(nodes, u["nodes"]):
            node.gidx = offset + node.ordinal
            if nd["parent"] is not None:
                node.parent = nodes[nd["parent"]]
                node.parent.children.append(node)
                node.depth = node.parent.depth + 1
                node.parent_transition = by_trans[m.index - 1][
                    (node.parent.base, nd["action"], node.base)
                ]
            if nd["sync"] is not None:
                pm, po = nd["sync"]
                node.sync_partner = per_machine_nodes[pm - 1][po]
            if nd["lasso"] is not None:
                node.cutoff_target = nodes[nd["lasso"]]
            node.env = tuple(
                per_machine_nodes[k][e] for k, e in enumerate(nd["env"])
            )
            node.fvec = tuple(e.base for e in node.env)
        offset += len(nodes)

    unfoldings = [
        Unfolding(machine=m, root=nodes[0], nodes=nodes)
        for m, nodes in zip(spec.machines, per_machine_nodes)
    ]
    roots = [u.root for u in unfoldings]
    ring = [(roots[i], roots[j]) for i in range(len(roots)) for j in range(i + 1, len(roots))]
    pairs = ring + sorted(
        (
            (n, n.sync_partner)
            for u in unfoldings
            for n in u.nodes
            if n.sync_partner is not None and n.machine < n.sync_partner.machine
        ),
        key=lambda p: (p[0].gidx, p[1].gidx),
    )
    lim = d.get("limits", {})
    return SumMachine(
        spec=spec,
        unfoldings=unfoldings,
        sync_pairs=pairs,
        mode=d.get("mode", "sequential"),
        limits=Limits(lim.get("max_nodes", 100_000), lim.get("max_depth", 500)),
        stats=d["stats"],
    )


def sum_from_json(text: str) -> SumMachine:
    return sum_from_dict(json.loads(text))


def unfolding_dot(sm: SumMachine, u: Unfolding) -> str:
    """One machine's tree: solid local edges, dashed ghosts for sync partners.

    Cut-off nodes are double-circled (with a dotted lasso edge back to their
    matching ancestor), dead leaves are filled.
    """
    lines = [f"digraph {u.machine.name} {{", "  rankdir=TB;"]
    for n in u.nodes:
        attrs = [f'label="{n.base}.{n.instance}"']
        if n.cutoff:
            attrs.append("peripheries=2")
        if n.dead:
            attrs.append('style=filled fillcolor="lightgray"')
        lines.append(f"  n{n.ordinal} [{' '.join(attrs)}];")
    for n in u.nodes:
        if n.parent is not None:
            lines.append(
                f'  n{n.parent.ordinal} -> n{n.ordinal} '
                f'[label="{n.parent_transition.action.name}"];'
            )
        if n.cutoff_target is not None:
            lines.append(
                f"  n{n.ordinal} -> n{n.cutoff_target.ordinal} [style=dotted constraint=false];"
            )
    ghosts = []
    for a, b in sm.sync_pairs:
        mine = a if a.machine == u.index else b if b.machine == u.index else None
        if mine is None:
            continue
        other = b if mine is a else a
        ghost = f"g{other.machine}_{other.ordinal}"
        if ghost not in ghosts:
            ghosts.append(ghost)
            lines.append(
                f'  {ghost} [label="{sm.spec.machine(other.machine).name}:'
                f'{other.base}.{other.instance}" shape=plaintext fontcolor=gray40];'
            )
        lines.append(f"  n{mine.ordinal} -> {ghost} [style=dashed arrowhead=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"
