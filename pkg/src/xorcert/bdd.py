"""Reduced ordered BDDs over a fixed variable order, without complement edges.

Node handles are ints.  Terminals are the sentinels T1/T0; nonterminal
handles are allocated from `first_id` upward, which lets a proof layer use
the handle itself as the node's extension variable.  Creation and reclaim
hooks (`on_node`, `on_free`) keep that layer in sync.
"""

from __future__ import annotations

TRUE_SENTINEL = 1_000_000_000
T1 = TRUE_SENTINEL
T0 = -TRUE_SENTINEL

_LEVEL_TERM = 1 << 40


class BddCapacityError(Exception):
    pass


class Bdd:
    def __init__(self, order, first_id=1, on_node=None, on_free=None):
        """order: variable ids, top of the BDD first.  first_id: lowest
        handle to allocate; must leave room below the terminal sentinel."""
        self.var_at = list(order)
        assert len(set(self.var_at)) == len(self.var_at), "order has duplicates"
        self.level_of = {v: i for i, v in enumerate(self.var_at)}
        self.next_id = first_id
        self.nodes = {}      # ref -> (level, hi, lo)
        self.unique = {}     # (level, hi, lo) -> ref
        self.refcount = {}
        self.and_memo = {}
        self.count_memo = {}
        self.on_node = on_node
        self.on_free = on_free
        self.peak_nodes = 0
        self.created_total = 0

    # -- structure ---------------------------------------------------------

    def is_terminal(self, u):
        return u == T1 or u == T0

    def level(self, u):
        return _LEVEL_TERM if self.is_terminal(u) else self.nodes[u][0]

    def var(self, u):
        return self.var_at[self.nodes[u][0]]

    def hi(self, u):
        return self.nodes[u][1]

    def lo(self, u):
        return self.nodes[u][2]

    def num_nodes(self):
        return len(self.nodes)

    def mk_node(self, var, hi, lo):
        """Reduced, hash-consed node; returns an existing handle when one fits."""
        if hi == lo:
            return hi
        lvl = self.level_of[var]
        assert self.level(hi) > lvl and self.level(lo) > lvl, "child above parent"
        key = (lvl, hi, lo)
        ref = self.unique.get(key)
        if ref is not None:
            return ref
        if self.next_id >= TRUE_SENTINEL:
            raise BddCapacityError("node id space exhausted")
        ref = self.next_id
        self.next_id += 1
        self.nodes[ref] = key
        self.unique[key] = ref
        self.created_total += 1
        if len(self.nodes) > self.peak_nodes:
            self.peak_nodes = len(self.nodes)
        if self.on_node is not None:
            self.on_node(ref, var, hi, lo)
        return ref

    # -- reference counting / reclaim --------------------------------------

    def ref(self, u):
        if not self.is_terminal(u):
            self.refcount[u] = self.refcount.get(u, 0) + 1
        return u

    def deref(self, u):
        if self.is_terminal(u):
            return
        n = self.refcount.get(u, 0) - 1
        if n < 0:
            raise AssertionError(f"refcount underflow on node {u}")
        self.refcount[u] = n

    def garbage_collect(self):
        """Free every node unreachable from externally referenced roots.
        Returns the freed handles, ascending.  Caches that mention a freed
        node are purged so later operations cannot resurrect stale entries."""
        marked = set()
        stack = [u for u, c in self.refcount.items() if c > 0]
        while stack:
            u = stack.pop()
            if u in marked or self.is_terminal(u):
                continue
            marked.add(u)
            _, hi, lo = self.nodes[u]
            stack.append(hi)
            stack.append(lo)
        freed = sorted(set(self.nodes) - marked)
        if not freed:
            return []
        fs = set(freed)
        for u in freed:
            del self.unique[self.nodes[u]]
            del self.nodes[u]
            self.refcount.pop(u, None)
        self.and_memo = {
            k: w for k, w in self.and_memo.items()
            if k[0] not in fs and k[1] not in fs and w not in fs
        }
        self.count_memo = {u: c for u, c in self.count_memo.items() if u not in fs}
        if self.on_free is not None:
            self.on_free(freed)
        return freed

    # -- operations ---------------------------------------------------------

    def and_bdd(self, u, v):
        if u == T0 or v == T0:
            return T0
        if u == T1 or u == v:
            return v
        if v == T1:
            return u
        key = (u, v) if u <= v else (v, u)
        w = self.and_memo.get(key)
        if w is not None:
            return w
        lu, lv = self.level(u), self.level(v)
        lvl = min(lu, lv)
        x = self.var_at[lvl]
        uh, ul = (self.hi(u), self.lo(u)) if lu == lvl else (u, u)
        vh, vl = (self.hi(v), self.lo(v)) if lv == lvl else (v, v)
        wh = self.and_bdd(uh, vh)
        wl = self.and_bdd(ul, vl)
        w = self.mk_node(x, wh, wl) if wh != wl else wh
        self.and_memo[key] = w
        return w

    def parity_bdd(self, vars, phase):
        """Canonical BDD of xor(vars) == phase: 2k-1 nonterminal nodes for
        k >= 2 under any order, one node for k == 1."""
        vs = sorted(vars, key=lambda v: self.level_of[v])
        if not vs:
            return T1 if phase == 0 else T0
        even, odd = T1, T0  # parity still owed: 0 / 1
        for v in vs[:0:-1]:
            even, odd = self.mk_node(v, odd, even), self.mk_node(v, even, odd)
        top = vs[0]
        return self.mk_node(top, odd, even) if phase == 0 else self.mk_node(top, even, odd)

    def sat_count(self, u):
        """Satisfying assignments over all |order| variables."""
        n = len(self.var_at)
        if u == T0:
            return 0
        if u == T1:
            return 1 << n

        def raw(w):
            # models over variables strictly below w's level
            if w == T1:
                return 1
            if w == T0:
                return 0
            c = self.count_memo.get(w)
            if c is not None:
                return c
            lvl, hi, lo = self.nodes[w]
            below = lambda child: min(self.level(child), n)
            c = raw(hi) * (1 << (below(hi) - lvl - 1)) + raw(lo) * (1 << (below(lo) - lvl - 1))
            self.count_memo[w] = c
            return c

        return raw(u) * (1 << self.nodes[u][0])

    def evaluate(self, u, assignment):
        """Follow `assignment` (dict var -> bool) from u to a terminal."""
        while not self.is_terminal(u):
            lvl, hi, lo = self.nodes[u]
            u = hi if assignment[self.var_at[lvl]] else lo
        return u == T1

    def support(self, u):
        out = set()
        seen = set()
        stack = [u]
        while stack:
            w = stack.pop()
            if w in seen or self.is_terminal(w):
                continue
            seen.add(w)
            lvl, hi, lo = self.nodes[w]
            out.add(self.var_at[lvl])
            stack.append(hi)
            stack.append(lo)
        return out

    def cone_size(self, u):
        seen = set()
        stack = [u]
        while stack:
            w = stack.pop()
            if w in seen or self.is_terminal(w):
                continue
            seen.add(w)
            stack.append(self.nodes[w][1])
            stack.append(self.nodes[w][2])
        return len(seen)

    def to_dot(self, u, name="bdd"):
        """DOT text for the cone under u, for debugging."""
        lines = [f"digraph {name} {{", '  T1 [shape=box,label="1"];', '  T0 [shape=box,label="0"];']
        seen = set()
        stack = [u]
        label = lambda w: "T1" if w == T1 else "T0" if w == T0 else f"n{w}"
        while stack:
            w = stack.pop()
            if w in seen or self.is_terminal(w):
                continue
            seen.add(w)
            lvl, hi, lo = self.nodes[w]
            lines.append(f'  n{w} [label="x{self.var_at[lvl]} ({w})"];')
            lines.append(f"  n{w} -> {label(hi)};")
            lines.append(f'  n{w} -> {label(lo)} [style=dashed];')
            stack.append(hi)
            stack.append(lo)
        lines.append("}")
        return "\n".join(lines) + "\n"
