"""Pure-Python relation kernel using arbitrary-width int bitsets."""

from __future__ import annotations

from .common import CO, CONF, IDENTITY, SEQ_BACKWARD, SEQ_FORWARD, UNCOVERED, KernelData

NAME = "pure"


class Kernel:
    """Answers causality/sequence/conflict/concurrency queries over gidx pairs."""

    def __init__(self, data: KernelData):
        self.data = data
        down = [0] * data.n_classes
        for c in reversed(data.topo):
            bits = 1 << c
            for i in range(data.class_child_start[c], data.class_child_start[c + 1]):
                bits |= down[data.class_child_list[i]]
            down[c] = bits
        up = [0] * data.n_classes
        for c in data.topo:
            bits = 1 << c
            for i in range(data.class_parent_start[c], data.class_parent_start[c + 1]):
                bits |= up[data.class_parent_list[i]]
            up[c] = bits
        self._down = down
        self._up = up

    def local_leq(self, a: int, b: int) -> bool:
        """True iff a is an ancestor-or-self of b within one machine's tree."""
        d = self.data
        return d.tin[a] <= d.tin[b] < d.tout[a]

    def leq(self, a: int, b: int) -> bool:
        d = self.data
        return self._down[d.class_id[a]] >> d.class_id[b] & 1 == 1

    def seq(self, a: int, b: int) -> bool:
        d = self.data
        cb = d.class_id[b]
        for i in range(d.child_start[a], d.child_start[a + 1]):
            if self._down[d.class_id[d.child_list[i]]] >> cb & 1:
                return True
        return False

    def _members(self, class_bits: int, k: int) -> list[int]:
        d = self.data
        out = []
        while class_bits:
            low = class_bits & -class_bits
            class_bits ^= low
            g = d.class_member[(low.bit_length() - 1) * d.n_machines + k]
            if g != -1:
                out.append(g)
        return out

    def conf(self, a: int, b: int) -> bool:
        d = self.data
        if a == b:
            return False
        if d.machine[a] == d.machine[b]:
            return not (self.local_leq(a, b) or self.local_leq(b, a))
        ua = self._up[d.class_id[a]]
        ub = self._up[d.class_id[b]]
        for k in range(d.n_machines):
            for x in self._members(ua, k):
                for y in self._members(ub, k):
                    if x != y and not (self.local_leq(x, y) or self.local_leq(y, x)):
                        return True
        return False

    def co_def(self, a: int, b: int) -> bool:
        return not (self.seq(a, b) or self.seq(b, a) or self.conf(a, b))

    def co_fast(self, a: int, b: int) -> bool:
        d = self.data
        n = d.n_machines
        ea = d.env[b * n + d.machine[a]]
        eb = d.env[a * n + d.machine[b]]
        return self.local_leq(ea, a) and self.local_leq(eb, b)

    def co_fast_steps(self, a: int, b: int) -> tuple[bool, int]:
        """co_fast by explicit parent walks, returning the hop count."""
        d = self.data
        n = d.n_machines
        steps = 0
        ok = True
        for top, start in ((d.env[b * n + d.machine[a]], a), (d.env[a * n + d.machine[b]], b)):
            cur = start
            while d.depth[cur] > d.depth[top]:
                cur = d.parent[cur]
                steps += 1
            if cur != top:
                ok = False
        return ok, steps

    def classify(self, a: int, b: int) -> tuple[int, int]:
        """Return (kind, mask of all holding kinds) for the ordered pair."""
        if a == b:
            return IDENTITY, 1 << IDENTITY
        sf = self.seq(a, b)
        sb = self.seq(b, a)
        cf = self.conf(a, b)
        mask = (sf << SEQ_FORWARD) | (sb << SEQ_BACKWARD) | (cf << CONF)
        if mask == 0:
            if self.data.machine[a] != self.data.machine[b]:
                return CO, 1 << CO
            return UNCOVERED, 0
        for kind in (SEQ_FORWARD, SEQ_BACKWARD, CONF):
            if mask >> kind & 1:
                return kind, mask
        raise AssertionError("unreachable")

    def sweep_totality(self, cap: int = 100) -> dict:
        """Classify every unordered pair; report uncovered pairs and overlaps."""
        uncovered = []
        overlaps = []
        n_overlaps = 0
        big = self.data.n_nodes
        for a in range(big):
            for b in range(a + 1, big):
                kind, mask = self.classify(a, b)
                if kind == UNCOVERED:
                    if len(uncovered) < cap:
                        uncovered.append((a, b))
                elif mask & (mask - 1):
                    n_overlaps += 1
                    if len(overlaps) < cap:
                        overlaps.append((a, b, mask))
        return {
            "pairs": big * (big - 1) // 2,
            "uncovered": uncovered,
            "overlaps": overlaps,
            "n_overlaps": n_overlaps,
        }

    def sweep_property1(self, cap: int = 100) -> dict:
        """Compare co_fast against co_def on every cross-machine pair."""
        mismatches = []
        n_mismatches = 0
        checked = 0
        d = self.data
        for a in range(d.n_nodes):
            for b in range(a + 1, d.n_nodes):
                if d.machine[a] == d.machine[b]:
                    continue
                checked += 1
                fast = self.co_fast(a, b)
                defn = self.co_def(a, b)
                if fast != defn:
                    n_mismatches += 1
                    if len(mismatches) < cap:
                        mismatches.append((a, b, fast, defn))
        return {"checked": checked, "mismatches": mismatches, "n_mismatches": n_mismatches}
