"""Causality (leq) and seq/conf/co relation algebra over sum-machine nodes."""

from __future__ import annotations

from enum import Enum
from typing import TextIO

from . import kernels
from .unfolding import Node, SumMachine


class RelationKind(Enum):
    IDENTITY = "identity"
    SEQ_FORWARD = "seq_forward"
    SEQ_BACKWARD = "seq_backward"
    CONF = "conf"
    CO = "co"


_KIND_BY_CODE = {
    kernels.IDENTITY: RelationKind.IDENTITY,
    kernels.SEQ_FORWARD: RelationKind.SEQ_FORWARD,
    kernels.SEQ_BACKWARD: RelationKind.SEQ_BACKWARD,
    kernels.CONF: RelationKind.CONF,
    kernels.CO: RelationKind.CO,
}
_MASK_ORDER = [
    (kernels.SEQ_FORWARD, RelationKind.SEQ_FORWARD),
    (kernels.SEQ_BACKWARD, RelationKind.SEQ_BACKWARD),
    (kernels.CONF, RelationKind.CONF),
    (kernels.CO, RelationKind.CO),
]


class RelationIndex:
    """Precomputed relation oracle; memory grows quadratically with node count."""

    def __init__(self, sm: SumMachine, backend: str | None = None):
        self.sum = sm
        self.nodes = sm.all_nodes()
        self.kernel = kernels.build_kernel(sm, backend=backend)
        self.overlaps: list[tuple[Node, Node, list[RelationKind]]] = []

    def node_label(self, s: Node) -> str:
        return f"{self.sum.spec.machines[s.machine - 1].name}:{s.name}"

    def leq(self, s: Node, t: Node) -> bool:
        """Causal order: t reachable from s via tree edges and partner links."""
        return self.kernel.leq(s.gidx, t.gidx)

    def seq_rel(self, s: Node, t: Node) -> bool:
        """True iff some local child of s is causally below-or-at t."""
        return self.kernel.seq(s.gidx, t.gidx)

    def conf_rel(self, s: Node, t: Node) -> bool:
        """Local tree incomparability, or inherited from conflicting causes."""
        return self.kernel.conf(s.gidx, t.gidx)

    def co_definitional(self, s: Node, t: Node) -> bool:
        """Concurrency as the complement of seq (both ways) and conf."""
        self._require_cross(s, t)
        return self.kernel.co_def(s.gidx, t.gidx)

    def co_fast(self, s: Node, t: Node) -> bool:
        """Two-anchor concurrency test: each env projection reaches the node."""
        self._require_cross(s, t)
        return self.kernel.co_fast(s.gidx, t.gidx)

    def co_fast_steps(self, s: Node, t: Node) -> tuple[bool, int]:
        """co_fast by explicit ancestor walks, returning the hop count."""
        self._require_cross(s, t)
        return self.kernel.co_fast_steps(s.gidx, t.gidx)

    @staticmethod
    def _require_cross(s: Node, t: Node) -> None:
        if s.machine == t.machine:
            raise ValueError("concurrency queries need nodes from distinct machines")

    def classify_pair(self, s: Node, t: Node) -> RelationKind:
        """Unique relation of an ordered pair; overlaps resolved by priority."""
        code, mask = self.kernel.classify(s.gidx, t.gidx)
        if code == kernels.UNCOVERED:
            raise RuntimeError(
                f"relation totality violated for ({self.node_label(s)}, {self.node_label(t)})"
            )
        if mask & (mask - 1):
            holding = [kind for bit, kind in _MASK_ORDER if mask >> bit & 1]
            self.overlaps.append((s, t, holding))
        return _KIND_BY_CODE[code]

    def check_totality(self, cap: int = 100) -> dict:
        """Sweep all unordered pairs; report uncovered pairs and overlaps."""
        raw = self.kernel.sweep_totality(cap=cap)
        return {
            "pairs": raw["pairs"],
            "uncovered": [(self.nodes[a], self.nodes[b]) for a, b in raw["uncovered"]],
            "n_overlaps": raw["n_overlaps"],
            "overlaps": [
                (self.nodes[a], self.nodes[b], [k for bit, k in _MASK_ORDER if mask >> bit & 1])
                for a, b, mask in raw["overlaps"]
            ],
        }

    def check_property1(self, cap: int = 100) -> dict:
        """Sweep cross-machine pairs comparing co_fast against co_definitional."""
        raw = self.kernel.sweep_property1(cap=cap)
        return {
            "checked": raw["checked"],
            "n_mismatches": raw["n_mismatches"],
            "mismatches": [
                (self.nodes[a], self.nodes[b], fast, defn)
                for a, b, fast, defn in raw["mismatches"]
            ],
        }

    def dump_tsv(self, out: TextIO) -> None:
        """Audit dump: one line per ordered node pair with its relation kind."""
        out.write("node_a\tnode_b\tkind\n")
        for s in self.nodes:
            for t in self.nodes:
                kind = self.classify_pair(s, t)
                out.write(f"{self.node_label(s)}\t{self.node_label(t)}\t{kind.value}\n")
