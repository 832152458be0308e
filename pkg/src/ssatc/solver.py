"""Prefix-ordered DPLL search for SSAT with proof logging and interpolation.

Variables are decided strictly in prefix order.  Each clause is watched by
the innermost variable it mentions (its owner): when the owner is decided,
a clause still unsatisfied either forces the owner's value or becomes a
conflict.  Every subtree returns a clause falsified by the current partial
assignment together with its exact value; if that clause does not mention
the branching variable, the sibling branch has the same value and is never
explored.  Otherwise the two branch clauses are resolved on the branching
variable.
"""

from __future__ import annotations

import sys
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .logic import (EXISTS, Formula, Partition, Prefix, SsatFormula, VarAllocator,
                    conj, neg, split_formula, to_cnf)
from .sresolution import (AnnotatedClause, ProofTrace, apply_r1, apply_r2, apply_r3, dc_formula,
                          interp_combine, interp_leaf)

ZERO = Fraction(0)
ONE = Fraction(1)

_DEEP_THRESHOLD = 400


class InternalCheckFailure(RuntimeError):
    pass


class PartitionNotCovering(ValueError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    emit_proof: bool = False
    emit_interpolant: bool = False
    dc_policy: object = "true"
    pruning: tuple[Fraction, Fraction] | None = None

    def __post_init__(self):
        if self.emit_interpolant and not self.emit_proof:
            raise ValueError("interpolants are extracted from proofs; set emit_proof")
        if self.pruning is not None:
            if self.emit_proof:
                raise ValueError("thresholding cannot be combined with proof logging")
            lo, hi = self.pruning
            if not lo < hi:
                raise ValueError("thresholds need lo < hi")


@dataclass
class Stats:
    nodes: int = 0
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    leaves: int = 0
    peak_depth: int = 0


@dataclass
class SolveResult:
    prob: Fraction
    kind: str = "exact"  # "exact", "at_least" or "at_most" (thresholding only)
    trace: ProofTrace | None = None
    interpolant: Formula | None = None
    stats: Stats = field(default_factory=Stats)


def run_deep(fn, *args, depth: int = 0):
    """Call ``fn`` with recursion headroom for ``depth`` nested frames."""
    need = 4 * depth + 2000
    if need > sys.getrecursionlimit():
        sys.setrecursionlimit(need)
    if depth < _DEEP_THRESHOLD:
        return fn(*args)
    box: dict = {}

    def target():
        try:
            box["value"] = fn(*args)
        except BaseException as exc:  # re-raised in the caller's thread
            box["error"] = exc

    old = threading.stack_size()
    threading.stack_size(min(1 << 30, max(64 << 20, depth * 16384)))
    try:
        worker = threading.Thread(target=target)
        worker.start()
        worker.join()
    finally:
        threading.stack_size(old)
    if "error" in box:
        raise box["error"]
    return box["value"]


class _Search:
    def __init__(self, phi: SsatFormula, part: Partition | None, dc: Formula, record: bool):
        self.phi = phi
        self.part = part
        self.dc = dc
        self.record = record
        self.trace = ProofTrace(phi, partition=part) if record else None
        self.order = [v for v, _ in phi.prefix.bindings]
        self.quant = [q for _, q in phi.prefix.bindings]
        self.pos = {v: i for i, v in enumerate(self.order)}
        self.clauses = list(phi.matrix)
        self.sorted = [sorted(c, key=lambda l: self.pos[abs(l)]) for c in self.clauses]
        self.occ: dict[int, list[int]] = defaultdict(list)
        self.owned: list[list[int]] = [[] for _ in self.order]
        for k, c in enumerate(self.clauses):
            for l in c:
                self.occ[l].append(k)
            if c:
                self.owned[self.pos[abs(self.sorted[k][-1])]].append(k)
        self.sat = [0] * len(self.clauses)
        self.unsat = len(self.clauses)
        self.trail: list[int] = []
        self.value: dict[int, bool] = {}
        self.stats = Stats()

    # -- assignment bookkeeping ------------------------------------------------

    def _assign(self, lit: int) -> None:
        self.trail.append(lit)
        self.value[abs(lit)] = lit > 0
        sat = self.sat
        for k in self.occ[lit]:
            if sat[k] == 0:
                self.unsat -= 1
            sat[k] += 1

    def _unassign(self, lit: int) -> None:
        sat = self.sat
        for k in self.occ[lit]:
            sat[k] -= 1
            if sat[k] == 0:
                self.unsat += 1
        del self.value[abs(lit)]
        self.trail.pop()

    def _blocking(self, i: int, lit: int) -> int | None:
        """A clause owned by position ``i`` that ``lit`` falsifies, if any."""
        for k in self.owned[i]:
            if self.sat[k] == 0 and -lit in self.clauses[k]:
                return k
        return None

    # -- proof-producing search -------------------------------------------------

    def _leaf(self):
        self.stats.leaves += 1
        value = self.value
        out = []
        for lits in self.sorted:
            for l in lits:
                if value[abs(l)] == (l > 0):
                    out.append(-l)
                    break
        clause = frozenset(out)
        step = None
        if self.record:
            depth = max((self.pos[abs(l)] for l in clause), default=-1)
            ac = apply_r2(clause, self.phi)
            step = self.trace.add("R2", ac, witness=tuple(self.trail[:depth + 1]),
                                  interpolant=self.dc if self.part is not None else None)
        return ONE, clause, self.dc, step

    def _conflict(self, k: int):
        self.stats.conflicts += 1
        clause = self.clauses[k]
        interp = interp_leaf(k, self.part) if self.part is not None else None
        step = None
        if self.record:
            step = self.trace.add("R1", apply_r1(clause, self.phi), interpolant=interp)
        return ZERO, clause, interp, step

    def _branch(self, i: int, lit: int):
        k = self._blocking(i, lit)
        if k is not None:
            return self._conflict(k)
        self._assign(lit)
        try:
            return self.rec(i + 1)
        finally:
            self._unassign(lit)

    def rec(self, i: int):
        st = self.stats
        st.nodes += 1
        if i > st.peak_depth:
            st.peak_depth = i
        if self.unsat == 0:
            return self._leaf()
        if i >= len(self.order):
            raise InternalCheckFailure("all variables assigned but the matrix is undecided")
        x = self.order[i]
        first = self._branch(i, x)
        if -x not in first[1]:
            return first
        second = self._branch(i, -x)
        q = self.quant[i]
        if x not in second[1]:
            # The sibling value must already agree with the returned one.
            if (q.is_random and first[0] != second[0]) or (not q.is_random and first[0] > second[0]):
                raise InternalCheckFailure("pass-through clause disagrees with sibling value")
            st.propagations += 1
            return second
        st.decisions += 1
        return self._resolve(x, q, first, second)

    def _resolve(self, x: int, q, left, right):
        p1, c1, i1, s1 = left
        p2, c2, i2, s2 = right
        clause = (c1 - {-x}) | (c2 - {x})
        p = q.prob * p1 + (1 - q.prob) * p2 if q.is_random else max(p1, p2)
        interp = interp_combine(x, i1, i2, self.part) if self.part is not None else None
        step = None
        if self.record:
            ac = apply_r3(s1.conclusion, s2.conclusion, x, self.phi)
            if ac.prob != p or ac.clause != clause:
                raise InternalCheckFailure("resolution step disagrees with search value")
            step = self.trace.add("R3", ac, premises=(s1.id, s2.id), pivot=x, interpolant=interp)
        return p, clause, interp, step

    def run(self):
        for k, c in enumerate(self.clauses):
            if not c:
                return self._conflict(k)
        return self.rec(0)

    # -- thresholding search (no proof) ----------------------------------------

    def _relevant(self, x: int) -> bool:
        sat = self.sat
        return any(sat[k] == 0 for k in self.occ[x]) or any(sat[k] == 0 for k in self.occ[-x])

    def _tbranch(self, i: int, lit: int, lo: Fraction, hi: Fraction) -> Fraction:
        if self._blocking(i, lit) is not None:
            self.stats.conflicts += 1
            return ZERO
        self._assign(lit)
        try:
            return self.trec(i + 1, lo, hi)
        finally:
            self._unassign(lit)

    def trec(self, i: int, lo: Fraction, hi: Fraction) -> Fraction:
        """Value ``v`` with: v = Pr if lo < Pr < hi; hi <= v <= Pr if Pr >= hi; Pr <= v <= lo if Pr <= lo."""
        st = self.stats
        st.nodes += 1
        if i > st.peak_depth:
            st.peak_depth = i
        if self.unsat == 0:
            st.leaves += 1
            return ONE
        x = self.order[i]
        if not self._relevant(x):
            return self._tbranch(i, x, lo, hi)
        st.decisions += 1
        q = self.quant[i]
        if not q.is_random:
            v1 = self._tbranch(i, x, lo, hi)
            if v1 >= hi or v1 == ONE:
                return v1
            v2 = self._tbranch(i, -x, max(lo, v1), hi)
            return max(v1, v2)
        p = q.prob
        lo1, hi1 = (lo - (1 - p)) / p, hi / p
        v1 = self._tbranch(i, x, lo1, hi1)
        if v1 <= lo1:
            return p * v1 + (1 - p)
        if v1 >= hi1:
            return p * v1
        lo2, hi2 = (lo - p * v1) / (1 - p), (hi - p * v1) / (1 - p)
        v2 = self._tbranch(i, -x, lo2, hi2)
        return p * v1 + (1 - p) * v2

    def run_threshold(self, lo: Fraction, hi: Fraction) -> Fraction:
        if any(not c for c in self.clauses):
            return ZERO
        return self.trec(0, lo, hi)


def solve(phi: SsatFormula, opts: SolveOptions | None = None,
          partition: Partition | None = None) -> SolveResult:
    """Exact Pr(phi); optionally with a checked proof trace and an interpolant."""
    opts = opts or SolveOptions()
    if opts.emit_interpolant and partition is None:
        raise ValueError("interpolation needs a partition")
    part = partition if opts.emit_interpolant else None
    dc = dc_formula(opts.dc_policy)
    if part is not None and not dc.vars() <= part.v_ab:
        raise ValueError("don't-care formula leaves the common variables")
    search = _Search(phi, part, dc, record=opts.emit_proof)
    if opts.pruning is not None:
        lo, hi = (Fraction(b) for b in opts.pruning)
        v = run_deep(search.run_threshold, lo, hi, depth=len(phi.prefix))
        kind = "at_least" if v >= hi else "at_most" if v <= lo else "exact"
        return SolveResult(v, kind, stats=search.stats)
    p, clause, interp, _ = run_deep(search.run, depth=len(phi.prefix))
    if clause:
        raise InternalCheckFailure("search ended with a non-empty clause")
    trace = search.trace
    if trace is not None and trace.steps[-1].conclusion != AnnotatedClause(frozenset(), p):
        raise InternalCheckFailure("trace does not end in the empty clause with the search value")
    return SolveResult(p, "exact", trace, interp if part is not None else None, search.stats)


def solve_partitioned(a: Sequence[Iterable[int]], b: Sequence[Iterable[int]], prefix: Prefix,
                      dc_policy="true") -> tuple[Fraction, Formula]:
    """Pr(prefix : A & B) and a generalized interpolant for (A, B)."""
    for c in list(a) + list(b):
        for l in c:
            if abs(l) not in prefix:
                raise PartitionNotCovering("variable %d is not bound by the prefix" % abs(l))
    phi, part = split_formula(prefix, a, b)
    res = solve(phi, SolveOptions(emit_proof=True, emit_interpolant=True, dc_policy=dc_policy), part)
    return res.prob, res.interpolant


def check_implication(p: Formula, q: Formula, vars: Iterable[int] = ()) -> bool:
    """True iff ``p & ~q`` is unsatisfiable."""
    vs = sorted(set(vars) | p.vars() | q.vars())
    alloc = VarAllocator(max(vs, default=0))
    clauses, aux = to_cnf(conj(p, neg(q)), alloc)
    prefix = Prefix([(v, EXISTS) for v in vs + aux])
    return solve(SsatFormula(prefix, clauses)).prob == 0
