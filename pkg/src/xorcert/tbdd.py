"""Proof-backed BDDs: nodes carry extension-variable definitions, and every
operation emits hint-checked clausal lemmas.

A node's handle doubles as its extension variable (handles start above the
input variable range).  Registering a node emits its up-to-four defining
clauses as hintless blocked steps, pivot first.  A Tbdd pairs a root node
with the proof id of the unit clause asserting its extension variable, so
holding a Tbdd means the proof has established that the root's function is
implied by the input formula.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .bdd import T0, T1, TRUE_SENTINEL, Bdd
from .formula import ParityConstraint

HD, LD, HU, LU = "hd", "ld", "hu", "lu"


class ProofEngineError(Exception):
    """A lemma failed to close under its own hints: a solver bug, not an
    input problem.  The proof stream is abandoned."""


def _clean(lits):
    """Drop false-terminal literals; None when the clause is tautological."""
    out = []
    seen = set()
    for l in lits:
        if l == TRUE_SENTINEL:
            return None
        if l == -TRUE_SENTINEL:
            continue
        if -l in seen:
            return None
        if l not in seen:
            seen.add(l)
            out.append(l)
    return tuple(out)


@dataclass
class Tbdd:
    """Trusted BDD: root handle plus the unit step asserting it.

    unit_id == 0 means trivially trusted (root is the true terminal).
    The root handle is also the extension variable.
    """

    root: int
    unit_id: int
    constraint: ParityConstraint | None = None
    dropped: bool = field(default=False, compare=False)

    @property
    def evar(self) -> int:
        return self.root


class TbddEngine:
    def __init__(self, order, writer, num_input_vars: int):
        self.writer = writer
        self.num_input_vars = num_input_vars
        self.defs: dict[int, dict[str, tuple[int, tuple[int, ...]]]] = {}
        self.and_cache: dict[tuple[int, int], tuple[int, int]] = {}
        self.imply_cache: dict[tuple[int, int], int] = {}
        self.pending_deletes: list[int] = []
        self.gc_node_threshold = 50_000
        self.bdd = Bdd(
            order,
            first_id=num_input_vars + 1,
            on_node=self._register_node,
            on_free=self._reclaim_nodes,
        )

    # -- node registration ---------------------------------------------------

    @staticmethod
    def _nlit(u):
        # terminal handles are already the +/- TRUE sentinel
        return u

    def _register_node(self, ref, var, hi, lo):
        """Emit the defining clauses of extension variable `ref`.

        Down clauses (pivot -ref) go first so each up clause is blocked on
        its pivot against only its own siblings.
        """
        w = self.writer
        entry = {}
        for role, shape in (
            (HD, (-ref, -var, hi)),
            (LD, (-ref, var, lo)),
            (HU, (ref, -var, -hi)),
            (LU, (ref, var, -lo)),
        ):
            cl = _clean(shape)
            if cl is not None:
                entry[role] = (w.add(cl, ()), cl)
        self.defs[ref] = entry

    def defining_clauses(self, ref):
        return self.defs[ref]

    def _reclaim_nodes(self, freed):
        for ref in freed:
            for cid, _ in self.defs.pop(ref).values():
                self.pending_deletes.append(cid)
        fs = set(freed)
        for key in [k for k, (w, _) in self.and_cache.items()
                    if k[0] in fs or k[1] in fs or w in fs]:
            _, jid = self.and_cache.pop(key)
            if jid:
                self.pending_deletes.append(jid)
        for key in [k for k in self.imply_cache if k[0] in fs or k[1] in fs]:
            jid = self.imply_cache.pop(key)
            if jid:
                self.pending_deletes.append(jid)

    def collect(self):
        """Reclaim unreferenced nodes and flush the delete backlog."""
        self.bdd.garbage_collect()
        self.flush_deletes()

    def maybe_collect(self):
        if self.bdd.num_nodes() > self.gc_node_threshold:
            self.collect()

    def flush_deletes(self):
        if self.pending_deletes:
            self.writer.delete(self.pending_deletes)
            self.pending_deletes = []

    # -- hint assembly -------------------------------------------------------

    def _emit_rup(self, lits, candidates):
        """Emit `lits` with exactly the hints that drive unit propagation to
        a conflict, in candidate order.  Satisfied candidates are skipped;
        anything else out of shape means the lemma schedule is broken."""
        assign = {abs(l): l < 0 for l in lits}
        hints = []
        for cand in candidates:
            if cand is None:
                continue
            cid, cl = cand
            unit = None
            nfree = 0
            satisfied = False
            for l in cl:
                v = abs(l)
                if v not in assign:
                    nfree += 1
                    unit = l
                    if nfree > 1:
                        break
                elif assign[v] == (l > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if nfree == 0:
                hints.append(cid)
                return self.writer.add(lits, hints)
            if nfree > 1:
                raise ProofEngineError(f"hint {cid} not unit while deriving {lits}")
            hints.append(cid)
            assign[abs(unit)] = unit > 0
        raise ProofEngineError(f"no conflict while deriving {lits}")

    def _def_cand(self, u, role):
        return self.defs[u].get(role) if u in self.defs else None

    @staticmethod
    def _unit_cand(t: Tbdd):
        if t.unit_id == 0:
            return None
        return (t.unit_id, _clean((t.root,)) or ())

    # -- clause introduction -------------------------------------------------

    def tbdd_from_clause(self, clause, input_id) -> Tbdd:
        """Trusted BDD of one input clause; one RUP step for the root unit."""
        assert clause, "empty clause has no BDD chain"
        b = self.bdd
        lits = sorted(clause, key=lambda l: b.level_of[abs(l)])
        rest = T0
        for l in reversed(lits):
            rest = b.mk_node(abs(l), T1, rest) if l > 0 else b.mk_node(abs(l), rest, T1)
        cands = []
        node = rest
        for l in lits:
            if l > 0:
                cands.append(self._def_cand(node, HU))
                cands.append(self._def_cand(node, LU))
                node = b.lo(node)
            else:
                cands.append(self._def_cand(node, LU))
                cands.append(self._def_cand(node, HU))
                node = b.hi(node)
        cands.append((input_id, tuple(clause)))
        uid = self._emit_rup((rest,), cands)
        b.ref(rest)
        return Tbdd(rest, uid)

    # -- conjunction ---------------------------------------------------------

    def _and_j(self, u, v):
        """(w, jid): w = u AND v, jid proves [-u, -v, w] (0 when tautological)."""
        if u == T0 or v == T0:
            return T0, 0
        if u == T1 or u == v:
            return v, 0
        if v == T1:
            return u, 0
        key = (u, v) if u <= v else (v, u)
        hit = self.and_cache.get(key)
        if hit is not None:
            return hit
        b = self.bdd
        lu, lv = b.level(u), b.level(v)
        lvl = min(lu, lv)
        x = b.var_at[lvl]
        uh, ul = (b.hi(u), b.lo(u)) if lu == lvl else (u, u)
        vh, vl = (b.hi(v), b.lo(v)) if lv == lvl else (v, v)
        wh, jh = self._and_j(uh, vh)
        wl, jl = self._and_j(ul, vl)
        w = b.mk_node(x, wh, wl) if wh != wl else wh
        target = _clean((-u, -v, w))
        if target is None:
            self.and_cache[key] = (w, 0)
            return w, 0
        step_h = self._emit_rup(
            _clean((-x, -u, -v, w)),
            [
                self._def_cand(u, HD) if lu == lvl else None,
                self._def_cand(v, HD) if lv == lvl else None,
                (jh, _clean((-uh, -vh, wh))) if jh else None,
                self._def_cand(w, HU) if not b.is_terminal(w) and b.level(w) == lvl else None,
            ],
        )
        jid = self._emit_rup(
            target,
            [
                (step_h, _clean((-x, -u, -v, w))),
                self._def_cand(u, LD) if lu == lvl else None,
                self._def_cand(v, LD) if lv == lvl else None,
                (jl, _clean((-ul, -vl, wl))) if jl else None,
                self._def_cand(w, LU) if not b.is_terminal(w) and b.level(w) == lvl else None,
            ],
        )
        self.pending_deletes.append(step_h)
        self.and_cache[key] = (w, jid)
        return w, jid

    def tbdd_and(self, a: Tbdd, b: Tbdd) -> Tbdd:
        """Conjunction with proof: emits the unit clause for the result root.
        A false result root makes that unit the empty clause."""
        w, jid = self._and_j(a.root, b.root)
        if w == T1:
            out = Tbdd(T1, 0)
        else:
            target = _clean((w,)) or ()
            uid = self._emit_rup(
                target,
                [
                    self._unit_cand(a),
                    self._unit_cand(b),
                    (jid, _clean((-a.root, -b.root, w))) if jid else None,
                ],
            )
            self.bdd.ref(w)
            out = Tbdd(w, uid)
        self.flush_deletes()
        return out

    # -- implication transfer ------------------------------------------------

    def _imply_j(self, u, v):
        """jid proving [-u, v] (0 when tautological); raises when u does not
        imply v, which callers treat as an internal solver bug."""
        if u == v or u == T0 or v == T1:
            return 0
        if u == T1 or v == T0:
            raise ProofEngineError(f"implication failure: {u} -> {v}")
        key = (u, v)
        hit = self.imply_cache.get(key)
        if hit is not None:
            return hit
        b = self.bdd
        lu, lv = b.level(u), b.level(v)
        lvl = min(lu, lv)
        x = b.var_at[lvl]
        uh, ul = (b.hi(u), b.lo(u)) if lu == lvl else (u, u)
        vh, vl = (b.hi(v), b.lo(v)) if lv == lvl else (v, v)
        jh = self._imply_j(uh, vh)
        jl = self._imply_j(ul, vl)
        step_h = self._emit_rup(
            _clean((-x, -u, v)),
            [
                self._def_cand(u, HD) if lu == lvl else None,
                (jh, _clean((-uh, vh))) if jh else None,
                self._def_cand(v, HU) if lv == lvl else None,
            ],
        )
        jid = self._emit_rup(
            (-u, v),
            [
                (step_h, _clean((-x, -u, v))),
                self._def_cand(u, LD) if lu == lvl else None,
                (jl, _clean((-ul, vl))) if jl else None,
                self._def_cand(v, LU) if lv == lvl else None,
            ],
        )
        self.pending_deletes.append(step_h)
        self.imply_cache[key] = jid
        return jid

    def tbdd_upgrade(self, a: Tbdd, v_root) -> Tbdd:
        """Transfer trust from a.root to the implied node v_root."""
        if v_root == T1:
            out = Tbdd(T1, 0)
        elif a.root == v_root:
            uid = self._emit_rup(_clean((v_root,)) or (), [self._unit_cand(a)])
            self.bdd.ref(v_root)
            out = Tbdd(v_root, uid)
        else:
            jid = self._imply_j(a.root, v_root)
            uid = self._emit_rup(
                _clean((v_root,)) or (),
                [self._unit_cand(a), (jid, _clean((-a.root, v_root))) if jid else None],
            )
            self.bdd.ref(v_root)
            out = Tbdd(v_root, uid)
        self.flush_deletes()
        return out

    # -- clause justification ------------------------------------------------

    def tbdd_justify_clause(self, a: Tbdd, clause) -> int:
        """One RUP step for a clause implied by a's function: the hints walk
        the falsifying path of the root down to the false terminal."""
        if a.root == T0:
            # the refutation is already complete; the empty clause stands in
            # for any reason clause
            return a.unit_id
        b = self.bdd
        alpha = {abs(l): l < 0 for l in clause}
        cands = [self._unit_cand(a)]
        node = a.root
        while node != T0:
            if node == T1:
                raise ProofEngineError(f"clause {clause} not implied: path reaches true")
            x = b.var(node)
            if x not in alpha:
                raise ProofEngineError(f"clause {clause} leaves {x} free on the path")
            role = HD if alpha[x] else LD
            cands.append(self._def_cand(node, role))
            node = b.hi(node) if alpha[x] else b.lo(node)
        return self._emit_rup(tuple(clause), cands)

    # -- parity sums ---------------------------------------------------------

    def tbdd_xor_sum(self, a: Tbdd, b: Tbdd) -> Tbdd:
        """Sum two trusted parity constraints: conjoin, then upgrade to the
        canonical parity BDD of the combined constraint and discard the
        conjunction, whose size would otherwise compound across sums."""
        assert a.constraint is not None and b.constraint is not None
        pc = a.constraint.combine(b.constraint)
        w = self.tbdd_and(a, b)
        if w.root == T0:
            w.constraint = pc
            return w
        v = self.bdd.parity_bdd(pc.vars, pc.phase)
        out = self.tbdd_upgrade(w, v)
        self.drop(w)
        out.constraint = pc
        return out

    def greedy_sum(self, tbdds) -> Tbdd:
        """Fold constraints by repeatedly summing the pair with the smallest
        symmetric difference; ties break on lowest position pair.  Positions
        follow the input list, then creation order of intermediate sums."""
        assert tbdds
        items: dict[int, Tbdd] = dict(enumerate(tbdds))
        owned = set()
        heap = []
        for i in items:
            for j in range(i + 1, len(tbdds)):
                d = len(set(items[i].constraint.vars) ^ set(items[j].constraint.vars))
                heap.append((d, i, j))
        heapq.heapify(heap)
        next_pos = len(tbdds)
        while len(items) > 1:
            d, i, j = heapq.heappop(heap)
            if i not in items or j not in items:
                continue
            s = self.tbdd_xor_sum(items[i], items[j])
            for k in (i, j):
                t = items.pop(k)
                if k in owned:
                    self.drop(t)
            if s.root == T0:
                # contradiction already yields the empty clause; summing
                # further would append past it
                for k, t in items.items():
                    if k in owned:
                        self.drop(t)
                self.flush_deletes()
                return s
            pos = next_pos
            next_pos += 1
            for k, t in items.items():
                d = len(set(s.constraint.vars) ^ set(t.constraint.vars))
                heapq.heappush(heap, (d, k, pos))
            items[pos] = s
            owned.add(pos)
            self.maybe_collect()
        (_, last), = items.items()
        return last

    # -- lifetime ------------------------------------------------------------

    def drop(self, t: Tbdd):
        """Release a Tbdd: deref the root and delete its unit step.  The
        empty clause of a false root is never deleted."""
        assert not t.dropped, "double drop"
        t.dropped = True
        if t.root not in (T0, T1):
            self.bdd.deref(t.root)
        if t.unit_id and t.root != T0:
            self.pending_deletes.append(t.unit_id)
