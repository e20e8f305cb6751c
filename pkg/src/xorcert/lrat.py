"""Clausal proof steps in text LRAT form: emission and checking.

An add line is ``<id> <lit>* 0 <hint>* 0``; a delete line is
``<id> d <id>* 0``.  Input clauses are implicitly numbered 1..C.  Hinted
steps are checked by reverse unit propagation driven only by the listed
hints, in order, with no search.  A step with an empty hint list is an
extension-variable definition: it is accepted only when it is blocked on
its first literal, whose variable must not occur in the input formula.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import CnfFormula, lit_var

DEFAULT_MAX_PROOF_CLAUSES = 2**30


class ProofLimitExceeded(Exception):
    """Raised by ProofWriter when the emitted-clause budget is exhausted."""


class ProofSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class AddStep:
    id: int
    lits: tuple[int, ...]
    hints: tuple[int, ...]


@dataclass(frozen=True)
class DeleteStep:
    id: int
    ids: tuple[int, ...]


def format_step(step) -> str:
    if isinstance(step, AddStep):
        mid = " ".join(str(l) for l in step.lits)
        tail = " ".join(str(h) for h in step.hints)
        return f"{step.id} {mid}{' ' if mid else ''}0 {tail}{' ' if tail else ''}0"
    mid = " ".join(str(i) for i in step.ids)
    return f"{step.id} d {mid}{' ' if mid else ''}0"


def parse_proof(text: str) -> list:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        try:
            sid = int(toks[0])
        except ValueError:
            raise ProofSyntaxError(f"line {lineno}: bad step id {toks[0]!r}") from None
        if len(toks) >= 2 and toks[1] == "d":
            try:
                body = [int(t) for t in toks[2:]]
            except ValueError:
                raise ProofSyntaxError(f"line {lineno}: bad token in delete") from None
            if not body or body[-1] != 0 or 0 in body[:-1]:
                raise ProofSyntaxError(f"line {lineno}: delete not 0-terminated")
            steps.append(DeleteStep(sid, tuple(body[:-1])))
            continue
        try:
            body = [int(t) for t in toks[1:]]
        except ValueError:
            raise ProofSyntaxError(f"line {lineno}: bad token in add step") from None
        zeros = [i for i, t in enumerate(body) if t == 0]
        if len(zeros) != 2 or zeros[1] != len(body) - 1:
            raise ProofSyntaxError(f"line {lineno}: add step needs two 0 terminators")
        steps.append(AddStep(sid, tuple(body[: zeros[0]]), tuple(body[zeros[0] + 1 : -1])))
    return steps


class ProofWriter:
    """Buffers formatted steps into a text sink, allocating monotone ids.

    The clause budget counts add steps only; exceeding it raises
    ProofLimitExceeded after the offending line has been withheld, so the
    file on disk is always whole-line well-formed.
    """

    def __init__(self, sink, num_input_clauses: int, max_clauses: int = DEFAULT_MAX_PROOF_CLAUSES):
        self.sink = sink
        self.last_id = num_input_clauses
        self.max_clauses = max_clauses
        self.adds = 0
        self.deletes = 0
        self.empty_emitted = False

    def _next(self) -> int:
        self.last_id += 1
        return self.last_id

    def add(self, lits, hints) -> int:
        assert not self.empty_emitted, "no steps may follow the empty clause"
        if self.adds + 1 > self.max_clauses:
            raise ProofLimitExceeded(f"proof clause budget {self.max_clauses} exhausted")
        step = AddStep(self._next(), tuple(lits), tuple(hints))
        self.sink.write(format_step(step) + "\n")
        self.adds += 1
        if not step.lits:
            self.empty_emitted = True
        return step.id

    def delete(self, ids) -> int | None:
        ids = tuple(ids)
        if not ids or self.empty_emitted:
            return None
        step = DeleteStep(self._next(), ids)
        self.sink.write(format_step(step) + "\n")
        self.deletes += len(ids)
        return step.id


@dataclass
class Verified:
    steps: int
    adds: int
    deletes: int
    hint_literal_visits: int
    has_empty: bool
    ok: bool = True


@dataclass
class Rejected:
    step_id: int
    reason: str
    ok: bool = False


def check(f: CnfFormula, steps, refutation: bool = True):
    """Replay `steps` against formula f.  Returns Verified or Rejected.

    Refutation mode additionally demands a final empty-clause step.
    """
    live: dict[int, tuple[int, ...]] = {i: cl for i, cl in enumerate(f.clauses, start=1)}
    # occurrence lists are kept only for variables beyond the input range;
    # those are the only legal pivots of definition steps
    occ: dict[int, set[int]] = {}
    max_id = f.num_clauses
    nvars = f.num_vars
    visits = 0
    adds = deletes = 0
    has_empty = False

    def track(cid, lits, add):
        for l in lits:
            v = lit_var(l)
            if v > nvars:
                if add:
                    occ.setdefault(v, set()).add(cid)
                else:
                    s = occ.get(v)
                    if s is not None:
                        s.discard(cid)

    for step in steps:
        if has_empty:
            return Rejected(step.id, "step after empty clause")
        if step.id <= max_id:
            return Rejected(step.id, f"id reuse: {step.id} not above {max_id}")
        max_id = step.id

        if isinstance(step, DeleteStep):
            for d in step.ids:
                if d not in live:
                    return Rejected(step.id, f"delete of non-live id {d}")
                track(d, live[d], add=False)
                del live[d]
            deletes += len(step.ids)
            continue

        lits = step.lits
        if step.hints:
            # reverse unit propagation, driven by the hints alone
            assign: dict[int, bool] = {}
            taut = False
            for l in lits:
                v = lit_var(l)
                want = l < 0  # assume the literal false
                if v in assign and assign[v] != want:
                    taut = True
                    break
                assign[v] = want
            if not taut:
                conflict = False
                for pos, h in enumerate(step.hints):
                    cl = live.get(h)
                    if cl is None:
                        return Rejected(step.id, f"bad hint: id {h} not live")
                    unit = None
                    satisfied = False
                    free = 0
                    for l in cl:
                        visits += 1
                        v = lit_var(l)
                        if v not in assign:
                            free += 1
                            unit = l
                            if free > 1:
                                break
                        elif assign[v] == (l > 0):
                            satisfied = True
                            break
                    if satisfied or free > 1:
                        return Rejected(step.id, f"hint {h} neither unit nor falsified")
                    if free == 0:
                        if pos != len(step.hints) - 1:
                            return Rejected(step.id, f"conflict at hint {h} before final hint")
                        conflict = True
                    else:
                        assign[lit_var(unit)] = unit > 0
                if not conflict:
                    return Rejected(step.id, "no conflict after final hint")
        else:
            if not lits:
                return Rejected(step.id, "empty clause needs hints")
            pivot = lits[0]
            pv = lit_var(pivot)
            if pv <= nvars:
                return Rejected(step.id, f"pivot not fresh: variable {pv} is an input variable")
            rest = set(lits[1:])
            for cid in occ.get(pv, ()):
                d = live[cid]
                if -pivot not in d:
                    continue
                # blocked check: every resolvent on the pivot must be a tautology
                if not any(-l in rest for l in d if l != -pivot):
                    return Rejected(
                        step.id, f"pivot not fresh: non-tautological resolvent with {cid}"
                    )
        live[step.id] = lits
        track(step.id, lits, add=True)
        adds += 1
        if not lits:
            has_empty = True

    if refutation and not has_empty:
        return Rejected(max_id, "refutation lacks empty clause")
    return Verified(adds + deletes, adds, deletes, visits, has_empty)
