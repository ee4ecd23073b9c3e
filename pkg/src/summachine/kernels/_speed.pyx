# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled relation kernel mirroring the pure-Python backend."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport calloc, free

from .common import CO, CONF, IDENTITY, SEQ_BACKWARD, SEQ_FORWARD, UNCOVERED

NAME = "speed"

cdef int KIND_IDENTITY = IDENTITY
cdef int KIND_SEQ_F = SEQ_FORWARD
cdef int KIND_SEQ_B = SEQ_BACKWARD
cdef int KIND_CONF = CONF
cdef int KIND_CO = CO
cdef int KIND_UNCOVERED = UNCOVERED


cdef int* _ints(list xs) except NULL:
    cdef Py_ssize_t n = len(xs)
    cdef int *out = <int *> calloc(n if n else 1, sizeof(int))
    cdef Py_ssize_t i
    if out == NULL:
        raise MemoryError()
    for i in range(n):
        out[i] = xs[i]
    return out


cdef class Kernel:
    """Answers causality/sequence/conflict/concurrency queries over gidx pairs."""

    cdef readonly object data
    cdef int n_machines, n_nodes, n_classes, words
    cdef int *machine
    cdef int *parent
    cdef int *depth
    cdef int *tin
    cdef int *tout
    cdef int *env
    cdef int *child_start
    cdef int *child_list
    cdef int *class_id
    cdef int *class_member
    cdef uint64_t *down
    cdef uint64_t *up
    cdef int *scratch_a
    cdef int *scratch_b

    def __cinit__(self, data):
        cdef int c, i, other, w
        cdef Py_ssize_t rows
        cdef list topo, cs, cl, ps, pl
        self.data = data
        self.n_machines = data.n_machines
        self.n_nodes = data.n_nodes
        self.n_classes = data.n_classes
        self.words = (data.n_classes + 63) >> 6
        if self.words == 0:
            self.words = 1
        self.machine = _ints(data.machine)
        self.parent = _ints(data.parent)
        self.depth = _ints(data.depth)
        self.tin = _ints(data.tin)
        self.tout = _ints(data.tout)
        self.env = _ints(data.env)
        self.child_start = _ints(data.child_start)
        self.child_list = _ints(data.child_list)
        self.class_id = _ints(data.class_id)
        self.class_member = _ints(data.class_member)
        rows = self.n_classes if self.n_classes else 1
        self.down = <uint64_t *> calloc(rows * self.words, sizeof(uint64_t))
        self.up = <uint64_t *> calloc(rows * self.words, sizeof(uint64_t))
        self.scratch_a = <int *> calloc(rows, sizeof(int))
        self.scratch_b = <int *> calloc(rows, sizeof(int))
        if self.down == NULL or self.up == NULL or self.scratch_a == NULL or self.scratch_b == NULL:
            raise MemoryError()
        topo = list(data.topo)
        cs = list(data.class_child_start)
        cl = list(data.class_child_list)
        ps = list(data.class_parent_start)
        pl = list(data.class_parent_list)
        for c in reversed(topo):
            self.down[c * self.words + (c >> 6)] |= (<uint64_t> 1) << (c & 63)
            for i in range(cs[c], cs[c + 1]):
                other = cl[i]
                for w in range(self.words):
                    self.down[c * self.words + w] |= self.down[other * self.words + w]
        for c in topo:
            self.up[c * self.words + (c >> 6)] |= (<uint64_t> 1) << (c & 63)
            for i in range(ps[c], ps[c + 1]):
                other = pl[i]
                for w in range(self.words):
                    self.up[c * self.words + w] |= self.up[other * self.words + w]

    def __dealloc__(self):
        free(self.machine)
        free(self.parent)
        free(self.depth)
        free(self.tin)
        free(self.tout)
        free(self.env)
        free(self.child_start)
        free(self.child_list)
        free(self.class_id)
        free(self.class_member)
        free(self.down)
        free(self.up)
        free(self.scratch_a)
        free(self.scratch_b)

    cdef inline bint _anc(self, int a, int b):
        return self.tin[a] <= self.tin[b] and self.tin[b] < self.tout[a]

    cdef inline bint _bit(self, uint64_t *bits, int c, int d):
        return (bits[c * self.words + (d >> 6)] >> (d & 63)) & 1

    cdef inline bint _seq(self, int a, int b):
        cdef int i
        cdef int cb = self.class_id[b]
        for i in range(self.child_start[a], self.child_start[a + 1]):
            if self._bit(self.down, self.class_id[self.child_list[i]], cb):
                return 1
        return 0

    cdef int _members(self, uint64_t *bits, int c, int k, int *out):
        cdef int w, pos, g, n = 0
        cdef uint64_t word
        for w in range(self.words):
            word = bits[c * self.words + w]
            pos = w << 6
            while word:
                if word & 1:
                    g = self.class_member[pos * self.n_machines + k]
                    if g != -1:
                        out[n] = g
                        n += 1
                word >>= 1
                pos += 1
        return n

    cdef bint _conf(self, int a, int b):
        cdef int k, na, nb, x, y, ca, cb
        if a == b:
            return 0
        if self.machine[a] == self.machine[b]:
            return not (self._anc(a, b) or self._anc(b, a))
        ca = self.class_id[a]
        cb = self.class_id[b]
        for k in range(self.n_machines):
            na = self._members(self.up, ca, k, self.scratch_a)
            nb = self._members(self.up, cb, k, self.scratch_b)
            for x in range(na):
                for y in range(nb):
                    if self.scratch_a[x] != self.scratch_b[y] and not (
                        self._anc(self.scratch_a[x], self.scratch_b[y])
                        or self._anc(self.scratch_b[y], self.scratch_a[x])
                    ):
                        return 1
        return 0

    cdef inline bint _co_fast(self, int a, int b):
        cdef int n = self.n_machines
        cdef int ea = self.env[b * n + self.machine[a]]
        cdef int eb = self.env[a * n + self.machine[b]]
        return self._anc(ea, a) and self._anc(eb, b)

    cdef int _classify(self, int a, int b, int *mask_out):
        cdef bint sf, sb, cf
        cdef int mask
        if a == b:
            mask_out[0] = 1 << KIND_IDENTITY
            return KIND_IDENTITY
        sf = self._seq(a, b)
        sb = self._seq(b, a)
        cf = self._conf(a, b)
        mask = (sf << KIND_SEQ_F) | (sb << KIND_SEQ_B) | (cf << KIND_CONF)
        mask_out[0] = mask
        if mask == 0:
            if self.machine[a] != self.machine[b]:
                mask_out[0] = 1 << KIND_CO
                return KIND_CO
            return KIND_UNCOVERED
        if sf:
            return KIND_SEQ_F
        if sb:
            return KIND_SEQ_B
        return KIND_CONF

    def local_leq(self, int a, int b):
        return bool(self._anc(a, b))

    def leq(self, int a, int b):
        return bool(self._bit(self.down, self.class_id[a], self.class_id[b]))

    def seq(self, int a, int b):
        return bool(self._seq(a, b))

    def conf(self, int a, int b):
        return bool(self._conf(a, b))

    def co_def(self, int a, int b):
        return not (self._seq(a, b) or self._seq(b, a) or self._conf(a, b))

    def co_fast(self, int a, int b):
        return bool(self._co_fast(a, b))

    def co_fast_steps(self, int a, int b):
        """co_fast by explicit parent walks, returning the hop count."""
        cdef int n = self.n_machines
        cdef int steps = 0
        cdef bint ok = 1
        cdef int top, cur, side
        for side in range(2):
            if side == 0:
                top = self.env[b * n + self.machine[a]]
                cur = a
            else:
                top = self.env[a * n + self.machine[b]]
                cur = b
            while self.depth[cur] > self.depth[top]:
                cur = self.parent[cur]
                steps += 1
            if cur != top:
                ok = 0
        return bool(ok), steps

    def classify(self, int a, int b):
        """Return (kind, mask of all holding kinds) for the ordered pair."""
        cdef int mask = 0
        cdef int kind = self._classify(a, b, &mask)
        return kind, mask

    def sweep_totality(self, int cap=100):
        """Classify every unordered pair; report uncovered pairs and overlaps."""
        cdef int a, b, kind, mask
        cdef long n_overlaps = 0
        cdef int big = self.n_nodes
        uncovered = []
        overlaps = []
        for a in range(big):
            for b in range(a + 1, big):
                kind = self._classify(a, b, &mask)
                if kind == KIND_UNCOVERED:
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

    def sweep_property1(self, int cap=100):
        """Compare co_fast against co_def on every cross-machine pair."""
        cdef int a, b
        cdef bint fast, defn
        cdef long checked = 0, n_mismatches = 0
        cdef int big = self.n_nodes
        mismatches = []
        for a in range(big):
            for b in range(a + 1, big):
                if self.machine[a] == self.machine[b]:
                    continue
                checked += 1
                fast = self._co_fast(a, b)
                defn = not (self._seq(a, b) or self._seq(b, a) or self._conf(a, b))
                if fast != defn:
                    n_mismatches += 1
                    if len(mismatches) < cap:
                        mismatches.append((a, b, bool(fast), bool(defn)))
        return {"checked": checked, "mismatches": mismatches, "n_mismatches": n_mismatches}
