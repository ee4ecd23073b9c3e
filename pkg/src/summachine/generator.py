"""Seeded random system generation plus the structured families used in tests.

Everything here is deterministic from its arguments, and every generated
system passes validate_system — generation is the fixture supply for the
oracle cross-validation campaigns.
"""

from __future__ import annotations

import random

from .spec_model import ActionLabel, CfsmSpec, CfsmTransition, SystemSpec, validate_system

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _state_names(m: int) -> list[str]:
    if m <= len(_LETTERS):
        return list(_LETTERS[:m])
    return [f"S{k}" for k in range(m)]


def generate_system(
    seed: int,
    n_machines: int,
    states_per_machine: int,
    coupling: int,
    conflict_width: int = 3,
) -> SystemSpec:
    """Build a random system: async skeleton per machine + `coupling` sync channels.

    conflict_width softly bounds local branching (extra async edges per
    machine). Raises ValueError on infeasible parameters, e.g. any coupling
    with fewer than two machines.
    """
    if n_machines < 1:
        raise ValueError("need at least one machine")
    if states_per_machine < 1:
        raise ValueError("need at least one state per machine")
    if conflict_width < 1:
        raise ValueError("conflict width must be positive")
    if coupling < 0:
        raise ValueError("coupling must be non-negative")
    if coupling > 0 and n_machines < 2:
        raise ValueError("coupling requires at least two machines (no possible partners)")

    rng = random.Random(seed)
    m = states_per_machine
    states = _state_names(m)
    transitions: list[list[CfsmTransition]] = [[] for _ in range(n_machines)]

    for i in range(n_machines):
        outdeg = {s: 0 for s in states}
        # Spanning skeleton: every state hangs off an earlier one, so the
        # whole machine is locally reachable from its initial state.
        for k in range(1, m):
            low = min(outdeg[s] for s in states[:k])
            src = rng.choice([s for s in states[:k] if outdeg[s] == low])
            transitions[i].append(CfsmTransition(src, ActionLabel(f"t{k}"), states[k]))
            outdeg[src] += 1
        # Extra local edges (possibly cycles or self-loops) up to the width.
        for j in range(rng.randint(0, conflict_width - 1)):
            src = rng.choice(states)
            dst = rng.choice(states)
            transitions[i].append(CfsmTransition(src, ActionLabel(f"e{j}"), dst))

    for c in range(coupling):
        i, j = rng.sample(range(n_machines), 2)
        act = f"x{c}"
        src_i, dst_i = rng.choice(states), rng.choice(states)
        src_j, dst_j = rng.choice(states), rng.choice(states)
        transitions[i].append(CfsmTransition(src_i, ActionLabel(act, j + 1), dst_i))
        transitions[j].append(CfsmTransition(src_j, ActionLabel(act, i + 1), dst_j))

    machines = []
    for i in range(n_machines):
        labels = {}
        if rng.random() < 0.6:
            labels[rng.choice(states)] = frozenset({"goal"})
        machines.append(
            CfsmSpec(
                index=i + 1,
                name=f"F{i + 1}",
                states=tuple(states),
                initial=states[0],
                transitions=tuple(transitions[i]),
                labels=labels,
            )
        )
    spec = SystemSpec(name=f"rand{seed}", machines=tuple(machines))
    problems = validate_system(spec)
    assert not problems, f"generator produced an invalid system: {problems}"
    return spec


def independent_family(n: int, m: int) -> SystemSpec:
    """n machines, each an async path of m states, no synchronization at all.

    The interleaving product has m**n states while each unfolding is just the
    path itself — the family that separates the two representations' sizes.
    """
    states = _state_names(m)
    machines = []
    for i in range(n):
        trans = tuple(
            CfsmTransition(states[k], ActionLabel(f"t{k + 1}"), states[k + 1])
            for k in range(m - 1)
        )
        machines.append(
            CfsmSpec(index=i + 1, name=f"F{i + 1}", states=tuple(states),
                     initial=states[0], transitions=trans)
        )
    return SystemSpec(name=f"indep{n}x{m}", machines=tuple(machines))


def relay_family(n: int) -> SystemSpec:
    """Token relay chain: machine i hands the token to machine i+1, then stops.

    Per-machine structure is fixed (at most 3 states) while n grows, so the
    per-machine unfolding size stays constant — the coupled family used to
    measure the d factor in the size bound.
    """
    if n < 2:
        raise ValueError("relay needs at least two machines")
    machines = []
    for i in range(1, n + 1):
        if i == 1:
            states = ("R", "D")
            trans = (CfsmTransition("R", ActionLabel("h1", 2), "D"),)
        elif i < n:
            states = ("W", "R", "D")
            trans = (
                CfsmTransition("W", ActionLabel(f"h{i - 1}", i - 1), "R"),
                CfsmTransition("R", ActionLabel(f"h{i}", i + 1), "D"),
            )
        else:
            states = ("W", "D")
            trans = (CfsmTransition("W", ActionLabel(f"h{n - 1}", n - 1), "D"),)
        machines.append(
            CfsmSpec(index=i, name=f"F{i}", states=states, initial=states[0],
                     transitions=trans)
        )
    return SystemSpec(name=f"relay{n}", machines=tuple(machines))
