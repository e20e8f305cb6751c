"""Conflict-driven search with an integrated parity-reasoning engine.

The clausal core is a standard two-watched-literal CDCL loop: first-UIP
learning, backjumping, activity-ordered decisions, Luby restarts, phase
saving.  Parity constraints recovered from the input encoding live in a
Gauss-Jordan engine that is consulted once clausal propagation reaches a
fixpoint; the two propagators alternate until neither adds anything.

Proof discipline: every learned clause is emitted as a hinted RUP step
whose hints are the reasons of the literals resolved away, in trail order,
with the conflict clause last.  Reasons reported by the parity engine are
justified the moment they are generated: the engine's shadow matrix names
the initial constraints summing to the row, those constraints' trusted
BDDs are summed (cached per row until the row changes), and the reason
clause is emitted with a single hinted step before the solver relies on
it.  A top-level conflict closes the proof with the empty clause.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

from .formula import CnfFormula, extract_xors, lit_var
from .gauss import CONFLICT, ParityEngine
from .lrat import DEFAULT_MAX_PROOF_CLAUSES, ProofLimitExceeded, ProofWriter
from .tbdd import TbddEngine

SAT = "SAT"
UNSAT = "UNSAT"
LIMIT = "LIMIT"

RESTART_BASE = 64
ACT_DECAY = 0.95
ACT_RESCALE = 1e100


def luby(i: int) -> int:
    """i-th term (1-based) of the Luby restart sequence 1,1,2,1,1,2,4,..."""
    assert i >= 1
    k = i.bit_length()
    if i == (1 << k) - 1:
        return 1 << (k - 1)
    return luby(i - (1 << (k - 1)) + 1)


class _Stop(Exception):
    def __init__(self, reason):
        self.reason = reason


@dataclass
class SolveResult:
    status: str
    model: list[int] | None = None
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0
    parity_propagations: int = 0
    restarts: int = 0
    learned: int = 0
    num_xors: int = 0
    elapsed: float = 0.0
    proof_adds: int = 0
    proof_deletes: int = 0
    ext_vars: int = 0
    peak_bdd_nodes: int = 0
    stop_reason: str = "done"


class _Clause:
    __slots__ = ("lits", "w", "pid", "learned")

    def __init__(self, lits, pid, learned):
        self.lits = tuple(lits)
        self.w = list(lits)
        self.pid = pid
        self.learned = learned


class Solver:
    def __init__(
        self,
        formula: CnfFormula,
        *,
        use_xor: bool = True,
        max_xor_arity: int = 6,
        proof_sink=None,
        max_proof_clauses: int = DEFAULT_MAX_PROOF_CLAUSES,
        var_order=None,
        timeout: float | None = None,
        seed: int | None = None,
    ):
        self.f = formula
        self.use_xor = use_xor
        self.max_xor_arity = max_xor_arity
        self.timeout = timeout
        self.seed = seed  # accepted for reproducibility plumbing; search is deterministic
        n = formula.num_vars
        if var_order is None:
            self.order = list(range(1, n + 1))
        else:
            self.order = list(var_order)
            assert sorted(self.order) == list(range(1, n + 1)), "order must permute the variables"
        self.writer = None
        if proof_sink is not None:
            self.writer = ProofWriter(proof_sink, formula.num_clauses, max_proof_clauses)
        # assignment state
        self.assign: dict[int, bool] = {}
        self.levels: dict[int, int] = {}
        self.reason_lits: dict[int, tuple | None] = {}
        self.reason_pid: dict[int, int | None] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.ghead = 0
        # clause store
        self.db: list[_Clause] = []
        self.watchlist: dict[int, list[int]] = {}
        # heuristics
        self.activity = [0.0] * (n + 1)
        self.var_inc = 1.0
        self.saved_phase = [False] * (n + 1)
        self.heap = [(0.0, v) for v in range(1, n + 1)]
        heapq.heapify(self.heap)
        # parity side
        self.par: ParityEngine | None = None
        self.tb: TbddEngine | None = None
        self.xors = []
        self.xor_tbdds = []
        self.row_sum: dict[int, tuple] = {}
        self.row_clause_ids: dict[int, dict] = {}
        # stats
        self.conflicts = 0
        self.decisions = 0
        self.propagations = 0
        self.parity_propagations = 0
        self.restarts = 0
        self.learned_count = 0

    # -- assignment primitives ----------------------------------------------

    @property
    def level(self) -> int:
        return len(self.trail_lim)

    def _val(self, lit):
        v = self.assign.get(lit_var(lit))
        if v is None:
            return None
        return v == (lit > 0)

    def _enqueue(self, lit, rlits, rpid):
        v = lit_var(lit)
        assert v not in self.assign
        self.assign[v] = lit > 0
        self.levels[v] = self.level
        self.reason_lits[v] = rlits
        self.reason_pid[v] = rpid
        self.trail.append(lit)

    def _backtrack(self, lvl):
        keep = self.trail_lim[lvl]
        for idx in range(len(self.trail) - 1, keep - 1, -1):
            lit = self.trail[idx]
            v = lit_var(lit)
            self.saved_phase[v] = lit > 0
            del self.assign[v]
            del self.levels[v]
            self.reason_lits.pop(v, None)
            self.reason_pid.pop(v, None)
            if self.par is not None and idx < self.ghead:
                self.par.on_unassign(v)
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[keep:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        self.ghead = min(self.ghead, len(self.trail))

    def _bump(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > ACT_RESCALE:
            for u in range(1, len(self.activity)):
                self.activity[u] *= 1.0 / ACT_RESCALE
            self.var_inc *= 1.0 / ACT_RESCALE
        heapq.heappush(self.heap, (-self.activity[v], v))

    def _decide(self):
        while self.heap:
            _, v = heapq.heappop(self.heap)
            if v not in self.assign:
                return v if self.saved_phase[v] else -v
        return None

    # -- clause store --------------------------------------------------------

    def _attach(self, ci):
        cl = self.db[ci]
        for lit in cl.w[:2]:
            self.watchlist.setdefault(lit, []).append(ci)

    def _add_input_clauses(self):
        for cid in range(1, self.f.num_clauses + 1):
            lits = self.f.clause(cid)
            ci = len(self.db)
            self.db.append(_Clause(lits, cid, learned=False))
            if len(lits) >= 2:
                self._attach(ci)

    # -- parity preparation --------------------------------------------------

    def _build_xor_tbdd(self, con):
        """Conjoin the constraint's own encoding clauses, then upgrade the
        result to the canonical parity BDD it must equal."""
        tb = self.tb
        acc = None
        for cid in con.source_clauses:
            t = tb.tbdd_from_clause(self.f.clause(cid), cid)
            if acc is None:
                acc = t
            else:
                nxt = tb.tbdd_and(acc, t)
                tb.drop(acc)
                tb.drop(t)
                acc = nxt
        target = tb.bdd.parity_bdd(con.vars, con.phase)
        up = tb.tbdd_upgrade(acc, target)
        up.constraint = con
        tb.drop(acc)
        tb.flush_deletes()
        return up

    def _prepare_parity(self):
        self.xors = extract_xors(self.f, max_arity=self.max_xor_arity)
        if not self.xors:
            return
        support = {v for c in self.xors for v in c.vars}
        cols = [v for v in self.order if v in support]
        self.par = ParityEngine(self.xors, column_vars=cols)
        if self.writer is not None:
            self.tb = TbddEngine(self.order, self.writer, self.f.num_vars)
            self.xor_tbdds = [self._build_xor_tbdd(c) for c in self.xors]
        self.par.full_reduce()

    def _justify(self, rec):
        if self.tb is None:
            return None
        row = rec.row
        ver = self.par.row_version[row]
        ent = self.row_sum.get(row)
        if ent is None or ent[0] != ver:
            if ent is not None and ent[2]:
                self.tb.drop(ent[1])
            self.row_clause_ids.pop(row, None)
            srcs = [self.xor_tbdds[i] for i in rec.origin]
            summed = self.tb.greedy_sum(srcs)
            ent = (ver, summed, len(srcs) > 1)
            self.row_sum[row] = ent
        cache = self.row_clause_ids.setdefault(row, {})
        pid = cache.get(rec.clause)
        if pid is None:
            pid = self.tb.tbdd_justify_clause(ent[1], rec.clause)
            cache[rec.clause] = pid
            self.tb.maybe_collect()
        return pid

    # -- propagation ---------------------------------------------------------

    def _propagate(self):
        """Clausal propagation to fixpoint, then one parity pass over the
        newly assigned suffix; alternate until a joint fixpoint or a
        conflict.  Returns (clause_lits, proof_id) on conflict else None."""
        while True:
            while self.qhead < len(self.trail):
                p = self.trail[self.qhead]
                self.qhead += 1
                self.propagations += 1
                falsified = -p
                ws = self.watchlist.get(falsified)
                if not ws:
                    continue
                kept = []
                i = 0
                confl = None
                while i < len(ws):
                    ci = ws[i]
                    i += 1
                    w = self.db[ci].w
                    if w[0] == falsified:
                        w[0], w[1] = w[1], w[0]
                    if self._val(w[0]) is True:
                        kept.append(ci)
                        continue
                    moved = False
                    for k in range(2, len(w)):
                        if self._val(w[k]) is not False:
                            w[1], w[k] = w[k], w[1]
                            self.watchlist.setdefault(w[1], []).append(ci)
                            moved = True
                            break
                    if moved:
                        continue
                    kept.append(ci)
                    if self._val(w[0]) is False:
                        confl = ci
                        kept.extend(ws[i:])
                        break
                    cl = self.db[ci]
                    self._enqueue(w[0], cl.lits, cl.pid)
                self.watchlist[falsified] = kept
                if confl is not None:
                    cl = self.db[confl]
                    return cl.lits, cl.pid
            if self.par is None or self.ghead >= len(self.trail):
                return None
            limit = len(self.trail)
            while self.ghead < limit:
                p = self.trail[self.ghead]
                self.ghead += 1
                for rec in self.par.on_assign(lit_var(p), p > 0):
                    out = self._handle_record(rec)
                    if out is not None:
                        return out

    def _handle_record(self, rec):
        self.parity_propagations += 1
        pid = self._justify(rec)
        assert rec.clause, "empty parity conflicts arise only before search"
        if rec.kind == CONFLICT:
            return rec.clause, pid
        lit = rec.clause[0]
        val = self._val(lit)
        if val is True:
            return None
        if val is False:
            return rec.clause, pid
        self._enqueue(lit, rec.clause, pid)
        return None

    # -- conflict analysis ---------------------------------------------------

    def _analyze(self, confl_lits, confl_pid):
        lvl = self.level
        seen = set()
        tail = []
        resolved = []
        counter = 0
        cur = confl_lits
        idx = len(self.trail) - 1
        while True:
            for q in cur:
                v = lit_var(q)
                if v in seen:
                    continue
                seen.add(v)
                self._bump(v)
                if self.levels[v] == lvl:
                    counter += 1
                else:
                    tail.append(q)
            assert counter > 0, "conflict clause must touch the current level"
            while lit_var(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            v = lit_var(p)
            counter -= 1
            if counter == 0:
                uip = p
                break
            resolved.append((idx, self.reason_pid[v]))
            cur = [q for q in self.reason_lits[v] if q != p]
            idx -= 1
        tail.sort(key=lambda q: -self.levels[lit_var(q)])
        learned = (-uip,) + tuple(tail)
        bj = self.levels[lit_var(tail[0])] if tail else 0
        resolved.sort()
        hints = [pid for _, pid in resolved] + [confl_pid]
        return learned, bj, hints

    def _derive_empty(self, confl_lits, confl_pid):
        """Top-level conflict: emit the empty clause hinted by the reasons
        of the conflict's transitive support, in trail order."""
        if self.writer is None:
            return
        need = {lit_var(q) for q in confl_lits}
        picked = []
        for idx in range(len(self.trail) - 1, -1, -1):
            v = lit_var(self.trail[idx])
            if v not in need:
                continue
            rl = self.reason_lits[v]
            assert rl is not None, "top-level literals always carry reasons"
            picked.append((idx, self.reason_pid[v]))
            need.update(lit_var(q) for q in rl)
        picked.sort()
        self.writer.add((), [pid for _, pid in picked] + [confl_pid])

    def _learn(self, learned, hints):
        pid = None
        if self.writer is not None:
            pid = self.writer.add(learned, hints)
        self.learned_count += 1
        if len(learned) == 1:
            return learned[0], learned, pid
        ci = len(self.db)
        self.db.append(_Clause(learned, pid, learned=True))
        self._attach(ci)
        return learned[0], learned, pid

    # -- top level -----------------------------------------------------------

    def _check_time(self, t0):
        if self.timeout is not None and time.monotonic() - t0 > self.timeout:
            raise _Stop("timeout")

    def _init_constraints(self):
        """Level-0 setup: input units, empty input clauses, parity rows that
        are already empty or unit.  Returns UNSAT when refutation closes."""
        for cid in range(1, self.f.num_clauses + 1):
            lits = self.f.clause(cid)
            if not lits:
                if self.writer is not None:
                    self.writer.add((), [cid])
                return UNSAT
        for ci, cl in enumerate(self.db):
            if len(cl.lits) == 1:
                lit = cl.lits[0]
                val = self._val(lit)
                if val is False:
                    if self.writer is not None:
                        self._derive_empty(cl.lits, cl.pid)
                    return UNSAT
                if val is None:
                    self._enqueue(lit, cl.lits, cl.pid)
        if self.par is not None:
            for rec in self.par.start_watches():
                pid = self._justify(rec)
                if not rec.clause:
                    # zero row with odd phase; its justification already
                    # closed the proof with the empty clause
                    assert rec.kind == CONFLICT
                    return UNSAT
                out = self._handle_record_initial(rec, pid)
                if out is not None:
                    return out
        return None

    def _handle_record_initial(self, rec, pid):
        if rec.kind == CONFLICT:
            self._derive_empty(rec.clause, pid)
            return UNSAT
        lit = rec.clause[0]
        val = self._val(lit)
        if val is True:
            return None
        if val is False:
            self._derive_empty(rec.clause, pid)
            return UNSAT
        self._enqueue(lit, rec.clause, pid)
        return None

    def _verify_model(self):
        asg = {v: self.assign[v] for v in self.assign}
        for cid in range(1, self.f.num_clauses + 1):
            lits = self.f.clause(cid)
            assert any(asg[lit_var(l)] == (l > 0) for l in lits), f"model misses clause {cid}"
        for con in self.xors:
            assert con.satisfied_by(asg), f"model violates recovered constraint {con}"
        return sorted((v if asg[v] else -v) for v in range(1, self.f.num_vars + 1))

    def _search(self, t0):
        while True:
            confl = self._propagate()
            if confl is not None:
                lits, pid = confl
                self.conflicts += 1
                self.conflicts_cur += 1
                self.var_inc /= ACT_DECAY
                if self.level == 0:
                    self._derive_empty(lits, pid)
                    return UNSAT
                learned, bj, hints = self._analyze(lits, pid)
                asserting, rlits, rpid = self._learn(learned, hints)
                self._backtrack(bj)
                self._enqueue(asserting, rlits, rpid)
                self._check_time(t0)
                continue
            self._check_time(t0)
            if (
                self.level > 0
                and self.conflicts_cur >= luby(self.restarts + 1) * RESTART_BASE
            ):
                self.restarts += 1
                self.conflicts_cur = 0
                self._backtrack(0)
                continue
            lit = self._decide()
            if lit is None:
                return SAT
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None, None)

    def solve(self) -> SolveResult:
        t0 = time.monotonic()
        status = None
        stop = "done"
        model = None
        try:
            self._add_input_clauses()
            if self.use_xor:
                self._prepare_parity()
            self.conflicts_cur = 0
            status = self._init_constraints()
            if status is None:
                status = self._search(t0)
            if status == SAT:
                model = self._verify_model()
        except _Stop as s:
            status = LIMIT
            stop = s.reason
        except ProofLimitExceeded:
            status = LIMIT
            stop = "proof-budget"
        res = SolveResult(
            status=status,
            model=model,
            conflicts=self.conflicts,
            decisions=self.decisions,
            propagations=self.propagations,
            parity_propagations=self.parity_propagations,
            restarts=self.restarts,
            learned=self.learned_count,
            num_xors=len(self.xors),
            elapsed=time.monotonic() - t0,
            stop_reason=stop,
        )
        if self.writer is not None:
            res.proof_adds = self.writer.adds
            res.proof_deletes = self.writer.deletes
        if self.tb is not None:
            res.ext_vars = self.tb.bdd.created_total
            res.peak_bdd_nodes = self.tb.bdd.peak_nodes
        return res


def solve_formula(f: CnfFormula, **kw) -> SolveResult:
    return Solver(f, **kw).solve()
