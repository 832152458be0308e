"""Independent certifying checker for derivation traces.

The side conditions are re-implemented here from scratch on plain Python
sets; nothing is imported from the rule module or the solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .logic import FALSE, TRUE, Formula, Partition, SsatFormula, conj, disj, lit

TRUTH_TABLE_LIMIT = 14


@dataclass
class StepVerdict:
    id: int
    ok: bool
    reason: str = ""


@dataclass
class CheckReport:
    accepted: bool
    steps: list[StepVerdict] = field(default_factory=list)
    certified: Fraction | None = None
    interpolant: Formula | None = None

    @property
    def failures(self) -> list[StepVerdict]:
        return [s for s in self.steps if not s.ok]

    @property
    def first_failure(self) -> StepVerdict | None:
        bad = self.failures
        return bad[0] if bad else None


def _tautological(lits) -> bool:
    return any(-l in lits for l in lits)


def _same_function(f: Formula, g: Formula) -> bool:
    if f == g:
        return True
    vs = sorted(f.vars() | g.vars())
    if len(vs) > TRUTH_TABLE_LIMIT:
        return False
    for bits in itertools.product((False, True), repeat=len(vs)):
        tau = dict(zip(vs, bits))
        if f.eval(tau) != g.eval(tau):
            return False
    return True


class _Checker:
    def __init__(self, phi: SsatFormula, part: Partition | None):
        self.phi = phi
        self.part = part
        self.pos = {v: k for k, (v, _) in enumerate(phi.prefix.bindings)}
        self.quant = dict(phi.prefix.bindings)
        self.matrix = [set(c) for c in phi.matrix]
        self.matrix_keys = {frozenset(c): k for k, c in enumerate(phi.matrix)}
        if part is not None:
            self.a_keys = {frozenset(phi.matrix[k]) for k in part.a_clauses}
            self.b_keys = {frozenset(phi.matrix[k]) for k in part.b_clauses}
            self.a_vars = {abs(l) for k in part.a_clauses for l in phi.matrix[k]}
            self.b_vars = {abs(l) for k in part.b_clauses for l in phi.matrix[k]}

    def depth(self, clause) -> int:
        return max((self.pos[abs(l)] for l in clause), default=-1)

    def r1(self, st) -> str:
        c = st.conclusion.clause
        if c not in self.matrix_keys:
            return "NotAMatrixClause"
        if st.conclusion.prob != 0:
            return "annotation mismatch: expected 0"
        if self.part is not None and st.interpolant is not None:
            ok = ((st.interpolant == FALSE and c in self.a_keys)
                  or (st.interpolant == TRUE and c in self.b_keys))
            if not ok:
                return "interpolant does not match the clause's side"
        return ""

    def r2(self, st) -> str:
        c = st.conclusion.clause
        if _tautological(c):
            return "tautological clause"
        if st.conclusion.prob != 1:
            return "annotation mismatch: expected 1"
        made_true = {-l for l in c}
        for k, m in enumerate(self.matrix):
            if not (m & made_true):
                return "PremiseViolated: matrix clause %d not hit by the falsifying assignment" % k
        if st.witness is not None:
            w = set(st.witness)
            if _tautological(w):
                return "inconsistent witness"
            if not made_true <= w:
                return "witness disagrees with the falsifying assignment"
            d = self.depth(c)
            if any(self.pos[abs(l)] > d for l in w):
                return "witness reaches beyond the clause's prefix"
            if any(not (m & w) for m in self.matrix):
                return "witness does not satisfy the matrix"
        if self.part is not None and st.interpolant is not None:
            if not st.interpolant.vars() <= self.part.v_ab:
                return "don't-care interpolant leaves the common variables"
        return ""

    def r3(self, st, done) -> str:
        i, j = st.premises
        if not (0 < i < st.id and 0 < j < st.id):
            return "premise does not refer to an earlier step"
        left, right = done[i], done[j]
        x = st.pivot
        if x is None or x <= 0 or x not in self.pos:
            return "bad pivot"
        if -x not in left.conclusion.clause or x not in right.conclusion.clause:
            return "PivotMissing"
        res = (set(left.conclusion.clause) - {-x}) | (set(right.conclusion.clause) - {x})
        if _tautological(res):
            return "TautologicalResolvent"
        if res != set(st.conclusion.clause):
            return "stated clause is not the resolvent"
        if any(self.pos[abs(l)] >= self.pos[x] for l in res):
            return "PrefixOrderViolated"
        q = self.quant[x]
        p1, p2 = left.conclusion.prob, right.conclusion.prob
        want = q.prob * p1 + (1 - q.prob) * p2 if q.is_random else max(p1, p2)
        if st.conclusion.prob != want:
            return "annotation mismatch: expected %s" % want
        if self.part is not None and st.interpolant is not None:
            i1, i2 = left.interpolant, right.interpolant
            if i1 is None or i2 is None:
                return "premise lacks an interpolant"
            in_a, in_b = x in self.a_vars, x in self.b_vars
            if in_a and not in_b:
                want_i = disj(i1, i2)
            elif in_b and not in_a:
                want_i = conj(i1, i2)
            else:
                want_i = conj(disj(lit(-x), i1), disj(lit(x), i2))
            if not _same_function(st.interpolant, want_i):
                return "interpolant does not follow the combination rule"
        return ""


def check_proof(trace) -> CheckReport:
    phi = trace.formula
    chk = _Checker(phi, trace.partition)
    report = CheckReport(accepted=True)
    done = {}
    for st in trace.steps:
        try:
            if any(abs(l) not in chk.pos for l in st.conclusion.clause):
                reason = "clause mentions an unbound variable"
            elif not (0 <= st.conclusion.prob <= 1):
                reason = "annotation outside [0, 1]"
            elif st.rule == "R1":
                reason = chk.r1(st)
            elif st.rule == "R2":
                reason = chk.r2(st)
            elif st.rule == "R3":
                reason = chk.r3(st, done)
            else:
                reason = "unknown rule"
        except (KeyError, TypeError, ValueError) as exc:
            reason = "malformed step: %s" % exc
        report.steps.append(StepVerdict(st.id, not reason, reason))
        done[st.id] = st
        if reason:
            report.accepted = False
    if report.accepted and trace.steps:
        last = trace.steps[-1]
        if not last.conclusion.clause:
            report.certified = last.conclusion.prob
            report.interpolant = last.interpolant
    if trace.partition is not None and report.accepted:
        if any(st.interpolant is None for st in trace.steps):
            report.accepted = False
            report.steps.append(StepVerdict(0, False, "partitioned trace with missing interpolants"))
    return report
