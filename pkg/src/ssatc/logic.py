"""Clause and formula representations over quantifier prefixes.

Literals are non-zero signed integers in the DIMACS convention: ``v`` is the
positive literal of variable ``v`` and ``-v`` its negation.  A clause is a
``frozenset`` of literals, which gives canonical hashing for resolution and
proof checking.  Probabilities are :class:`fractions.Fraction` throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Clause = frozenset
Assignment = Mapping[int, bool]


class LogicError(ValueError):
    pass


class TautologicalClause(LogicError):
    pass


class DuplicateBinding(LogicError):
    pass


class UnboundVariable(LogicError):
    pass


def make_clause(lits: Iterable[int]) -> frozenset[int]:
    clause = frozenset(lits)
    if 0 in clause:
        raise LogicError("0 is not a literal")
    return clause


def is_tautology(clause: Iterable[int]) -> bool:
    s = set(clause)
    return any(-l in s for l in s)


def sorted_lits(clause: Iterable[int]) -> list[int]:
    return sorted(clause, key=lambda l: (abs(l), l < 0))


def clause_str(clause: Iterable[int]) -> str:
    lits = sorted_lits(clause)
    if not lits:
        return "()"
    return "(" + " | ".join(("~%d" % -l) if l < 0 else str(l) for l in lits) + ")"


def falsifying_assignment(clause: Iterable[int]) -> dict[int, bool]:
    """The unique assignment over Var(c) under which ``clause`` is false."""
    ff: dict[int, bool] = {}
    for lit in clause:
        value = lit < 0
        v = abs(lit)
        if ff.get(v, value) != value:
            raise TautologicalClause("clause contains %d and %d" % (v, -v))
        ff[v] = value
    return ff


def lit_value(lit: int, tau: Assignment) -> bool | None:
    v = tau.get(abs(lit))
    if v is None:
        return None
    return v if lit > 0 else not v


def eval_clause(clause: Iterable[int], tau: Assignment) -> bool | None:
    """True if some literal holds, False if all are falsified, else None."""
    undetermined = False
    for lit in clause:
        val = lit_value(lit, tau)
        if val is True:
            return True
        if val is None:
            undetermined = True
    return None if undetermined else False


# ---------------------------------------------------------------------------
# Quantifiers and prefixes


@dataclass(frozen=True)
class Quantifier:
    kind: str  # "E" or "R"
    prob: Fraction | None = None

    def __post_init__(self):
        if self.kind == "E":
            if self.prob is not None:
                raise LogicError("existential quantifier carries no probability")
        elif self.kind == "R":
            if self.prob is None or not (0 < self.prob < 1):
                raise LogicError("randomized quantifier needs 0 < p < 1, got %r" % (self.prob,))
            object.__setattr__(self, "prob", Fraction(self.prob))
        else:
            raise LogicError("unknown quantifier kind %r" % (self.kind,))

    @property
    def is_random(self) -> bool:
        return self.kind == "R"

    def __str__(self) -> str:
        return "E" if self.kind == "E" else "R^%s" % self.prob


EXISTS = Quantifier("E")


def random_q(p) -> Quantifier:
    return Quantifier("R", Fraction(p))


class Prefix:
    """Ordered quantifier bindings ``Q1 x1 ... Qn xn``."""

    __slots__ = ("bindings", "_pos")

    def __init__(self, bindings: Iterable[tuple[int, Quantifier]] = ()):
        self.bindings: tuple[tuple[int, Quantifier], ...] = tuple(bindings)
        self._pos: dict[int, int] = {}
        for i, (v, q) in enumerate(self.bindings):
            if v <= 0:
                raise LogicError("variables are positive integers, got %r" % v)
            if v in self._pos:
                raise DuplicateBinding("variable %d bound twice" % v)
            self._pos[v] = i

    def __len__(self) -> int:
        return len(self.bindings)

    def __iter__(self) -> Iterator[tuple[int, Quantifier]]:
        return iter(self.bindings)

    def __contains__(self, v: int) -> bool:
        return v in self._pos

    def __eq__(self, other) -> bool:
        return isinstance(other, Prefix) and self.bindings == other.bindings

    def __hash__(self) -> int:
        return hash(self.bindings)

    def __repr__(self) -> str:
        return "Prefix(%s)" % " ".join("%s %d" % (q, v) for v, q in self.bindings)

    def position(self, v: int) -> int:
        try:
            return self._pos[v]
        except KeyError:
            raise UnboundVariable("variable %d is not bound" % v) from None

    def quantifier(self, v: int) -> Quantifier:
        return self.bindings[self.position(v)][1]

    @property
    def variables(self) -> list[int]:
        return [v for v, _ in self.bindings]

    def append(self, vars: Sequence[int], q: Quantifier | None = None) -> "Prefix":
        """Bind ``vars`` innermost, in the given order."""
        if not vars:
            return self
        if q is None:
            raise LogicError("a quantifier is needed to bind new variables")
        return Prefix(self.bindings + tuple((v, q) for v in vars))


def prefix_append(p: Prefix, vars: Sequence[int], q: Quantifier | None = None) -> Prefix:
    return p.append(vars, q)


# ---------------------------------------------------------------------------
# SSAT formulas


class SsatFormula:
    """A closed SSAT formula: prefix plus CNF matrix (a list of clauses)."""

    __slots__ = ("prefix", "matrix")

    def __init__(self, prefix: Prefix, matrix: Iterable[Iterable[int]]):
        self.prefix = prefix
        self.matrix: tuple[frozenset[int], ...] = tuple(make_clause(c) for c in matrix)
        for c in self.matrix:
            if is_tautology(c):
                raise TautologicalClause("tautological matrix clause %s" % clause_str(c))
            for lit in c:
                if abs(lit) not in prefix:
                    raise UnboundVariable("variable %d occurs free" % abs(lit))

    @property
    def num_vars(self) -> int:
        return max(self.prefix.variables, default=0)

    def __repr__(self) -> str:
        return "SsatFormula(%r, %d clauses)" % (self.prefix, len(self.matrix))


def matrix_vars(clauses: Iterable[Iterable[int]]) -> set[int]:
    return {abs(l) for c in clauses for l in c}


# ---------------------------------------------------------------------------
# Formula trees


class Formula:
    """Immutable propositional formula.  Build with the smart constructors."""

    __slots__ = ()

    def vars(self) -> set[int]:
        out: set[int] = set()
        self._collect(out)
        return out

    def _collect(self, out: set[int]) -> None:
        for ch in self.children():
            ch._collect(out)

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __invert__(self) -> "Formula":
        return neg(self)

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def eval(self, tau: Assignment) -> bool:
        return self.value

    def __str__(self) -> str:
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Lit(Formula):
    lit: int

    def eval(self, tau: Assignment) -> bool:
        val = tau[abs(self.lit)]
        return val if self.lit > 0 else not val

    def _collect(self, out: set[int]) -> None:
        out.add(abs(self.lit))

    def __str__(self) -> str:
        return ("~%d" % -self.lit) if self.lit < 0 else str(self.lit)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)

    def eval(self, tau: Assignment) -> bool:
        return not self.child.eval(tau)

    def __str__(self) -> str:
        return "~%s" % (self.child,)


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]

    def children(self):
        return self.args

    def eval(self, tau: Assignment) -> bool:
        return all(a.eval(tau) for a in self.args)

    def __str__(self) -> str:
        return "(" + " & ".join(str(a) for a in self.args) + ")"


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]

    def children(self):
        return self.args

    def eval(self, tau: Assignment) -> bool:
        return any(a.eval(tau) for a in self.args)

    def __str__(self) -> str:
        return "(" + " | ".join(str(a) for a in self.args) + ")"


def var(v: int) -> Formula:
    return Lit(v)


def lit(l: int) -> Formula:
    return Lit(l)


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Lit):
        return Lit(-f.lit)
    if isinstance(f, Not):
        return f.child
    return Not(f)


def _junction(cls, unit: Const, zero: Const, parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    seen: set[Formula] = set()
    lits: set[int] = set()
    stack = list(parts)
    stack.reverse()
    while stack:
        f = stack.pop()
        if isinstance(f, cls):
            stack.extend(reversed(f.args))
            continue
        if f == unit:
            continue
        if f == zero:
            return zero
        if isinstance(f, Lit):
            if -f.lit in lits:
                return zero
            lits.add(f.lit)
        if f in seen:
            continue
        seen.add(f)
        flat.append(f)
    if not flat:
        return unit
    if len(flat) == 1:
        return flat[0]
    return cls(tuple(flat))


def conj(*parts: Formula) -> Formula:
    """Conjunction that folds constants and flattens nested conjunctions."""
    return _junction(And, TRUE, FALSE, parts)


def disj(*parts: Formula) -> Formula:
    """Disjunction that folds constants and flattens nested disjunctions."""
    return _junction(Or, FALSE, TRUE, parts)


def conj_all(parts: Iterable[Formula]) -> Formula:
    return conj(*parts)


def disj_all(parts: Iterable[Formula]) -> Formula:
    return disj(*parts)


def clause_formula(clause: Iterable[int]) -> Formula:
    return disj(*(Lit(l) for l in sorted_lits(clause)))


def cnf_formula(clauses: Iterable[Iterable[int]]) -> Formula:
    return conj(*(clause_formula(c) for c in clauses))


def rename(f: Formula, mapping: Mapping[int, int]) -> Formula:
    """Substitute variables by variables (signs preserved)."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Lit):
        v = mapping.get(abs(f.lit), abs(f.lit))
        return Lit(v if f.lit > 0 else -v)
    if isinstance(f, Not):
        return neg(rename(f.child, mapping))
    if isinstance(f, And):
        return conj(*(rename(a, mapping) for a in f.args))
    return disj(*(rename(a, mapping) for a in f.args))


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in f.children())


# ---------------------------------------------------------------------------
# CNF conversion


class VarAllocator:
    """Hands out fresh variable indices above a starting point."""

    def __init__(self, last_used: int):
        self.last = last_used

    def fresh(self) -> int:
        self.last += 1
        return self.last


def _nnf(f: Formula, positive: bool = True) -> Formula:
    if isinstance(f, Const):
        return f if positive else neg(f)
    if isinstance(f, Lit):
        return f if positive else Lit(-f.lit)
    if isinstance(f, Not):
        return _nnf(f.child, not positive)
    parts = [_nnf(a, positive) for a in f.args]
    if isinstance(f, And) == positive:
        return conj(*parts)
    return disj(*parts)


def _cnf_nnf(f: Formula, alloc: VarAllocator, aux: list[int]) -> list[frozenset[int]]:
    if isinstance(f, Const):
        return [] if f.value else [frozenset()]
    if isinstance(f, Lit):
        return [frozenset((f.lit,))]
    if isinstance(f, And):
        out: list[frozenset[int]] = []
        for a in f.args:
            out.extend(_cnf_nnf(a, alloc, aux))
        return out
    # Or: literals stay, every compound disjunct is named by a fresh variable
    # implying it (one-sided definitions suffice for positive occurrences).
    head: set[int] = set()
    defs: list[frozenset[int]] = []
    for a in f.args:
        if isinstance(a, Lit):
            head.add(a.lit)
            continue
        sub = _cnf_nnf(a, alloc, aux)
        if len(sub) == 1:
            head.update(sub[0])
            continue
        if not sub:
            return []
        x = alloc.fresh()
        aux.append(x)
        head.add(x)
        defs.extend(c | {-x} for c in sub)
    if is_tautology(head):
        return []
    return [frozenset(head)] + defs


def to_cnf(f: Formula, alloc: VarAllocator) -> tuple[list[frozenset[int]], list[int]]:
    """CNF of ``f`` with structural auxiliaries; returns (clauses, aux_vars)."""
    aux: list[int] = []
    clauses = _cnf_nnf(_nnf(f), alloc, aux)
    seen: set[frozenset[int]] = set()
    out = []
    for c in clauses:
        if is_tautology(c) or c in seen:
            continue
        seen.add(c)
        out.append(c)
    return out, aux


def negate_to_cnf(f: Formula, alloc: VarAllocator) -> tuple[list[frozenset[int]], list[int]]:
    """CNF encoding of ``~f``; models projected onto Var(f) are exactly those of ``~f``."""
    return to_cnf(neg(f), alloc)


# ---------------------------------------------------------------------------
# Small helpers used by several modules


def assignments(vars: Sequence[int]) -> Iterator[dict[int, bool]]:
    for bits in itertools.product((False, True), repeat=len(vars)):
        yield dict(zip(vars, bits))


def equivalent(f: Formula, g: Formula, vars: Sequence[int] | None = None) -> bool:
    """Truth-table equivalence check over ``vars`` (default: union of supports)."""
    vs = sorted(f.vars() | g.vars()) if vars is None else list(vars)
    return all(f.eval(t) == g.eval(t) for t in assignments(vs))


# ---------------------------------------------------------------------------
# (A, B) partitions of a matrix


class PartitionError(LogicError):
    pass


@dataclass(frozen=True)
class Partition:
    """Split of a clause list into an A part and a B part, with the induced variable classes."""

    a_clauses: frozenset[int]
    b_clauses: frozenset[int]
    v_a: frozenset[int]
    v_b: frozenset[int]
    v_ab: frozenset[int]

    @classmethod
    def from_indices(cls, matrix: Sequence[Iterable[int]], a_indices: Iterable[int]) -> "Partition":
        a_idx = frozenset(a_indices)
        if not a_idx <= set(range(len(matrix))):
            raise PartitionError("A-indices outside the matrix")
        b_idx = frozenset(range(len(matrix))) - a_idx
        va = matrix_vars(matrix[i] for i in a_idx)
        vb = matrix_vars(matrix[i] for i in b_idx)
        return cls(a_idx, b_idx, frozenset(va - vb), frozenset(vb - va), frozenset(va & vb))

    def side(self, idx: int) -> str:
        return "A" if idx in self.a_clauses else "B"

    def var_class(self, v: int) -> str:
        if v in self.v_ab:
            return "AB"
        if v in self.v_a:
            return "A"
        if v in self.v_b:
            return "B"
        raise PartitionError("variable %d occurs in neither part" % v)


def split_formula(prefix: Prefix, a: Sequence[Iterable[int]], b: Sequence[Iterable[int]]) -> tuple[SsatFormula, Partition]:
    """The formula ``prefix : (A & B)`` with A's clauses first, plus its partition."""
    phi = SsatFormula(prefix, list(a) + list(b))
    return phi, Partition.from_indices(phi.matrix, range(len(a)))


def to_rational(x) -> Fraction:
    """Exact rational from a Fraction, int, decimal string or float (via its shortest repr)."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)
