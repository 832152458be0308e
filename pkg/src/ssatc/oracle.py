"""Ground-truth engines that validate the solver and the encodings.

Everything here works by direct expansion of the definitions, either over
the quantifier prefix or over the explicit MDP state space, and shares no
code with the search-based solver.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .logic import Formula, Partition, SsatFormula, matrix_vars
from .mdp import Mdp

ZERO = Fraction(0)
ONE = Fraction(1)


class TooLarge(ValueError):
    pass


def default_cap() -> int:
    return int(os.environ.get("SSATC_ORACLE_CAP", "24"))


def _check_cap(n: int, cap: int | None) -> None:
    if cap is None:
        return
    if n > cap:
        raise TooLarge("%d variables exceed the oracle cap of %d" % (n, cap))


# ---------------------------------------------------------------------------
# SSAT semantics


def exact_pr(phi: SsatFormula, cap: int | None | str = "default") -> Fraction:
    """Pr(phi) by quantifier expansion over the residual clause set.

    ``cap`` bounds the number of quantified variables; pass ``None`` to lift it.
    """
    if cap == "default":
        cap = default_cap()
    _check_cap(len(phi.prefix), cap)
    order = phi.prefix.bindings
    memo: dict[tuple[int, frozenset], Fraction] = {}

    def assign(clauses: frozenset, lit: int) -> frozenset | None:
        out = []
        for c in clauses:
            if lit in c:
                continue
            if -lit in c:
                c = c - {-lit}
                if not c:
                    return None
            out.append(c)
        return frozenset(out)

    def rec(i: int, clauses: frozenset) -> Fraction:
        if not clauses:
            return ONE
        key = (i, clauses)
        hit = memo.get(key)
        if hit is not None:
            return hit
        v, q = order[i]
        pos = assign(clauses, v)
        neg = assign(clauses, -v)
        if q.is_random and q.prob is not None:
            t = ZERO if pos is None else rec(i + 1, pos)
            f = ZERO if neg is None else rec(i + 1, neg)
            val = q.prob * t + (1 - q.prob) * f
        else:
            t = ZERO if pos is None else rec(i + 1, pos)
            if t == ONE:
                val = ONE
            else:
                f = ZERO if neg is None else rec(i + 1, neg)
                val = max(t, f)
        memo[key] = val
        return val

    matrix = frozenset(phi.matrix)
    if frozenset() in matrix:
        return ZERO
    return rec(0, matrix)


def enumerate_pr(phi: SsatFormula, cap: int | None = 20) -> Fraction:
    """Pr(phi) from the full table of 2^n leaves, folded innermost quantifier first."""
    n = len(phi.prefix)
    _check_cap(n, cap)
    vars_ = phi.prefix.variables
    clauses = [tuple(c) for c in phi.matrix]
    leaves: list[Fraction] = []
    # itertools.product varies the last variable fastest, so adjacent pairs
    # differ exactly in the innermost variable: (true, false) order below.
    for bits in itertools.product((True, False), repeat=n):
        tau = dict(zip(vars_, bits))
        sat = all(any(tau[abs(l)] == (l > 0) for l in c) for c in clauses)
        leaves.append(ONE if sat else ZERO)
    for v, q in reversed(phi.prefix.bindings):
        folded = []
        for k in range(0, len(leaves), 2):
            t, f = leaves[k], leaves[k + 1]
            folded.append(q.prob * t + (1 - q.prob) * f if q.is_random else max(t, f))
        leaves = folded
    return leaves[0]


# ---------------------------------------------------------------------------
# Projections and interpolant validity


@dataclass(frozen=True)
class TruthTable:
    """Entry ``k`` is the value at the assignment whose bit ``j`` (MSB first) gives ``vars[j]``."""

    vars: tuple[int, ...]
    bits: tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) != 1 << len(self.vars):
            raise ValueError("truth table needs 2^n entries")

    def index(self, tau) -> int:
        k = 0
        for v in self.vars:
            k = (k << 1) | (1 if tau[v] else 0)
        return k

    def __call__(self, tau) -> bool:
        return self.bits[self.index(tau)]

    def is_const(self, value: bool) -> bool:
        return all(b == value for b in self.bits)


def _sat(clauses: Iterable[frozenset], tau) -> bool:
    return all(any(tau[abs(l)] == (l > 0) for l in c) for c in clauses)


def _points(vars_: Sequence[int]):
    for bits in itertools.product((False, True), repeat=len(vars_)):
        yield dict(zip(vars_, bits))


def project_common(a: Sequence[frozenset], b: Sequence[frozenset], part: Partition,
                   cap: int | None = 24) -> TruthTable:
    """Truth table over the common variables of the existential projection of A & B."""
    common = tuple(sorted(part.v_ab))
    local = sorted((matrix_vars(a) | matrix_vars(b)) - set(common))
    _check_cap(len(common) + len(local), cap)
    bits = []
    both = list(a) + list(b)
    for tau in _points_msb(common):
        hit = False
        for ext in _points(local):
            ext.update(tau)
            if _sat(both, ext):
                hit = True
                break
        bits.append(hit)
    return TruthTable(common, tuple(bits))


def _points_msb(vars_: Sequence[int]):
    # Matches TruthTable.index: first variable is the most significant bit.
    for k in range(1 << len(vars_)):
        yield {v: bool((k >> (len(vars_) - 1 - j)) & 1) for j, v in enumerate(vars_)}


def is_generalized_interpolant(interp: Formula, phi: SsatFormula, part: Partition,
                               cap: int | None = 24) -> bool:
    a = [phi.matrix[i] for i in sorted(part.a_clauses)]
    b = [phi.matrix[i] for i in sorted(part.b_clauses)]
    if not interp.vars() <= part.v_ab:
        return False
    table = project_common(a, b, part, cap)
    vars_ = sorted(matrix_vars(phi.matrix))
    for tau in _points(vars_):
        if table(tau):
            continue
        holds = interp.eval(tau)
        if not holds and _sat(a, tau):
            return False
        if holds and _sat(b, tau):
            return False
    return True


def is_satisfiable(clauses: Sequence[frozenset], cap: int | None = 24) -> bool:
    vars_ = sorted(matrix_vars(clauses))
    _check_cap(len(vars_), cap)
    return any(_sat(clauses, tau) for tau in _points(vars_))


# ---------------------------------------------------------------------------
# Explicit-state MDP analyses


def _step_values(m: Mdp, prev: dict[str, Fraction]) -> dict[str, list[Fraction]]:
    return {s: [sum((w * prev[t] for t, w in m.trans[(s, a)]), ZERO) for a in m.available(s)]
            for s in m.states}


def max_reach_table(m: Mdp, target: Iterable[str], k: int) -> dict[str, Fraction]:
    target = set(target)
    val = {s: (ONE if s in target else ZERO) for s in m.states}
    for _ in range(k):
        opts = _step_values(m, val)
        val = {s: (ONE if s in target else max(opts[s])) for s in m.states}
    return val


def mdp_max_reach_bounded(m: Mdp, target: Iterable[str], k: int) -> Fraction:
    return max_reach_table(m, target, k)[m.init]


def min_reach_table(m: Mdp, goal: Iterable[str], k: int) -> dict[str, Fraction]:
    goal = set(goal)
    val = {s: (ONE if s in goal else ZERO) for s in m.states}
    for _ in range(k):
        opts = _step_values(m, val)
        val = {s: (ONE if s in goal else min(opts[s])) for s in m.states}
    return val


def mdp_min_reach_bounded(m: Mdp, goal: Iterable[str], k: int) -> Fraction:
    return min_reach_table(m, goal, k)[m.init]


def mdp_max_avoid_bounded(m: Mdp, avoid: Iterable[str], k: int) -> Fraction:
    """Maximal probability of staying outside ``avoid`` for steps 0..k."""
    avoid = set(avoid)
    val = {s: (ZERO if s in avoid else ONE) for s in m.states}
    for _ in range(k):
        opts = _step_values(m, val)
        val = {s: (ZERO if s in avoid else max(opts[s])) for s in m.states}
    return val[m.init]


def mdp_backward_set(m: Mdp, target: Iterable[str]) -> frozenset[str]:
    reach = set(target)
    changed = True
    while changed:
        changed = False
        for s in m.states:
            if s not in reach and m.successors(s) & reach:
                reach.add(s)
                changed = True
    return frozenset(reach)


def escapes(m: Mdp, states: Iterable[str]) -> bool:
    """True if some (state, action) pair leaves ``states`` with positive probability."""
    inside = set(states)
    return any(t not in inside
               for s in inside for a in m.available(s) for t, _ in m.trans[(s, a)])


def mdp_max_kernel(m: Mdp, region: Iterable[str]) -> frozenset[str]:
    kernel = set(region)
    changed = True
    while changed:
        changed = False
        for s in sorted(kernel, key=m.index):
            if any(t not in kernel for a in m.available(s) for t, _ in m.trans[(s, a)]):
                kernel.discard(s)
                changed = True
    return frozenset(kernel)
