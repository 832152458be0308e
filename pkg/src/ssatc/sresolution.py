"""Probability-annotated resolution rules with interpolants, and derivation traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .logic import (FALSE, TRUE, And, Const, Formula, Lit, Not, Partition, SsatFormula, clause_str,
                    conj, disj, is_tautology, lit, neg, sorted_lits)
from .sdimacs import SdimacsError, parse_sdimacs, write_sdimacs

ZERO = Fraction(0)
ONE = Fraction(1)


class RuleError(ValueError):
    pass


class NotAMatrixClause(RuleError):
    pass


class PremiseViolated(RuleError):
    pass


class PivotMissing(RuleError):
    pass


class TautologicalResolvent(RuleError):
    pass


class PrefixOrderViolated(RuleError):
    pass


class DcPolicyVariablesOutsideCommon(RuleError):
    pass


@dataclass(frozen=True)
class AnnotatedClause:
    clause: frozenset[int]
    prob: Fraction

    def __post_init__(self):
        if is_tautology(self.clause):
            raise RuleError("annotated clause is tautological")
        if not (0 <= self.prob <= 1):
            raise RuleError("annotation %s outside [0, 1]" % self.prob)

    def __str__(self) -> str:
        return "%s^%s" % (clause_str(self.clause), self.prob)


RULES = ("R1", "R2", "R3")


@dataclass
class DerivationStep:
    id: int
    rule: str
    conclusion: AnnotatedClause
    premises: tuple[int, ...] = ()
    pivot: int | None = None
    witness: tuple[int, ...] | None = None
    interpolant: Formula | None = None

    @property
    def interpolating_rule(self) -> str:
        return {"R1": "R2_1", "R2": "R2_2", "R3": "R2_3"}[self.rule]


@dataclass
class ProofTrace:
    formula: SsatFormula
    steps: list[DerivationStep] = field(default_factory=list)
    partition: Partition | None = None

    def add(self, rule: str, conclusion: AnnotatedClause, **kw) -> DerivationStep:
        step = DerivationStep(len(self.steps) + 1, rule, conclusion, **kw)
        self.steps.append(step)
        return step

    @property
    def result(self) -> DerivationStep | None:
        return self.steps[-1] if self.steps else None


# ---------------------------------------------------------------------------
# S-resolution rules


def apply_r1(c: Iterable[int], phi: SsatFormula) -> AnnotatedClause:
    c = frozenset(c)
    if c not in phi.matrix:
        raise NotAMatrixClause("%s is not a matrix clause" % clause_str(c))
    return AnnotatedClause(c, ZERO)


def r2_premise_holds(c: frozenset[int], matrix: Sequence[frozenset[int]]) -> bool:
    """Every extension of the falsifying assignment of ``c`` satisfies each clause syntactically.

    Literals over Var(c) made true by that assignment are exactly the
    negations of the literals of ``c``; a clause without one of them can be
    left unsatisfied by the remaining variables, so the premise reduces to
    a hitting test.
    """
    flipped = {-l for l in c}
    return all(not flipped.isdisjoint(m) for m in matrix)


def apply_r2(c: Iterable[int], phi: SsatFormula) -> AnnotatedClause:
    c = frozenset(c)
    if is_tautology(c):
        raise RuleError("R2 needs a non-tautological clause")
    for l in c:
        phi.prefix.position(abs(l))
    if not r2_premise_holds(c, phi.matrix):
        raise PremiseViolated("some extension of ff(%s) leaves the matrix unsatisfied" % clause_str(c))
    return AnnotatedClause(c, ONE)


def resolvent(left: frozenset[int], right: frozenset[int], pivot: int) -> frozenset[int]:
    if -pivot not in left:
        raise PivotMissing("left premise lacks %d" % -pivot)
    if pivot not in right:
        raise PivotMissing("right premise lacks %d" % pivot)
    res = (left - {-pivot}) | (right - {pivot})
    if is_tautology(res):
        raise TautologicalResolvent("resolvent %s is tautological" % clause_str(res))
    return res


def apply_r3(left: AnnotatedClause, right: AnnotatedClause, pivot: int, phi: SsatFormula) -> AnnotatedClause:
    """Resolve ``left`` (holding the negative pivot) with ``right`` (holding the positive pivot)."""
    pivot = abs(pivot)
    res = resolvent(left.clause, right.clause, pivot)
    prefix = phi.prefix
    ppos = prefix.position(pivot)
    if any(prefix.position(abs(l)) >= ppos for l in res):
        raise PrefixOrderViolated("pivot %d is not bound after every resolvent variable" % pivot)
    q = prefix.quantifier(pivot)
    if q.is_random:
        p = q.prob * left.prob + (1 - q.prob) * right.prob
    else:
        p = max(left.prob, right.prob)
    return AnnotatedClause(res, p)


# ---------------------------------------------------------------------------
# Interpolating rules


def dc_formula(policy) -> Formula:
    if policy in ("true", True, TRUE):
        return TRUE
    if policy in ("false", False, FALSE):
        return FALSE
    if isinstance(policy, Formula):
        return policy
    raise ValueError("unknown don't-care policy %r" % (policy,))


def interp_leaf(index: int, part: Partition) -> Formula:
    return FALSE if part.side(index) == "A" else TRUE


def interp_combine(pivot: int, i1: Formula, i2: Formula, part: Partition) -> Formula:
    """Interpolant of a resolvent; ``i1`` belongs to the premise holding the negative pivot."""
    kind = part.var_class(pivot)
    if kind == "A":
        return disj(i1, i2)
    if kind == "B":
        return conj(i1, i2)
    return conj(disj(lit(-pivot), i1), disj(lit(pivot), i2))


def apply_interpolating(rule: str, phi: SsatFormula, part: Partition, *,
                        clause: Iterable[int] | None = None, index: int | None = None,
                        left: tuple[AnnotatedClause, Formula] | None = None,
                        right: tuple[AnnotatedClause, Formula] | None = None,
                        pivot: int | None = None, dc_policy="true") -> tuple[AnnotatedClause, Formula]:
    if rule == "R2_1":
        if index is None:
            c = frozenset(clause)
            try:
                index = phi.matrix.index(c)
            except ValueError:
                raise NotAMatrixClause("%s is not a matrix clause" % clause_str(c)) from None
        ac = apply_r1(phi.matrix[index], phi)
        return ac, interp_leaf(index, part)
    if rule == "R2_2":
        dc = dc_formula(dc_policy)
        if not dc.vars() <= part.v_ab:
            raise DcPolicyVariablesOutsideCommon("don't-care formula leaves the common variables")
        return apply_r2(clause, phi), dc
    if rule == "R2_3":
        ac = apply_r3(left[0], right[0], pivot, phi)
        return ac, interp_combine(abs(pivot), left[1], right[1], part)
    raise ValueError("unknown interpolating rule %r" % rule)


# ---------------------------------------------------------------------------
# Interpolant s-expressions


def to_sexpr(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Lit):
        return "(var %d)" % f.lit if f.lit > 0 else "(not (var %d))" % -f.lit
    if isinstance(f, Not):
        return "(not %s)" % to_sexpr(f.child)
    op = "and" if isinstance(f, And) else "or"
    return "(%s %s)" % (op, " ".join(to_sexpr(a) for a in f.args))


class SexprError(ValueError):
    pass


def parse_sexpr(text: str) -> Formula:
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse() -> Formula:
        nonlocal pos
        if pos >= len(tokens):
            raise SexprError("unexpected end of s-expression")
        tok = tokens[pos]
        pos += 1
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok != "(":
            raise SexprError("unexpected token %r" % tok)
        if pos >= len(tokens):
            raise SexprError("unexpected end of s-expression")
        head = tokens[pos]
        pos += 1
        if head == "var":
            try:
                v = int(tokens[pos])
            except (IndexError, ValueError):
                raise SexprError("bad variable") from None
            if v <= 0:
                raise SexprError("bad variable %d" % v)
            pos += 1
            node = lit(v)
        elif head in ("and", "or", "not"):
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if head == "not":
                if len(args) != 1:
                    raise SexprError("not takes one argument")
                node = neg(args[0])
            elif not args:
                raise SexprError("%s needs at least one argument" % head)
            else:
                node = conj(*args) if head == "and" else disj(*args)
        else:
            raise SexprError("unknown operator %r" % head)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise SexprError("missing )")
        pos += 1
        return node

    node = parse()
    if pos != len(tokens):
        raise SexprError("trailing tokens")
    return node


# ---------------------------------------------------------------------------
# Trace text format


class TraceFormatError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(msg if line is None else "line %d: %s" % (line, msg))


def _lits(xs: Iterable[int]) -> str:
    return " ".join(str(l) for l in list(xs) + [0])


def write_trace(trace: ProofTrace) -> str:
    out = []
    for line in write_sdimacs(trace.formula).splitlines():
        out.append("f " + line)
    if trace.partition is not None:
        out.append("A " + _lits(k + 1 for k in sorted(trace.partition.a_clauses)))
    for st in trace.steps:
        ac = st.conclusion
        body = _lits(sorted_lits(ac.clause))
        if st.rule == "R1":
            out.append("s %d R1 %s p %s" % (st.id, body, ac.prob))
        elif st.rule == "R2":
            out.append("s %d R2 %s p %s w %s" % (st.id, body, ac.prob, _lits(st.witness or ())))
        else:
            out.append("s %d R3 %d %d x %d %s p %s" % (st.id, st.premises[0], st.premises[1],
                                                       st.pivot, body, ac.prob))
        if st.interpolant is not None:
            out.append("i %d %s" % (st.id, to_sexpr(st.interpolant)))
    return "\n".join(out) + "\n"


def _read_list(tok: list[str], k: int, lineno: int) -> tuple[list[int], int]:
    out = []
    while True:
        if k >= len(tok):
            raise TraceFormatError("unterminated literal list", lineno)
        try:
            v = int(tok[k])
        except ValueError:
            raise TraceFormatError("expected a literal, got %r" % tok[k], lineno) from None
        k += 1
        if v == 0:
            return out, k
        out.append(v)


def _read_prob(tok: list[str], k: int, lineno: int) -> tuple[Fraction, int]:
    if k + 1 >= len(tok) or tok[k] != "p":
        raise TraceFormatError("expected 'p <rational>'", lineno)
    try:
        return Fraction(tok[k + 1]), k + 2
    except (ValueError, ZeroDivisionError):
        raise TraceFormatError("bad rational %r" % tok[k + 1], lineno) from None


def parse_trace(text: str) -> ProofTrace:
    """Parse a trace.  Structural problems raise; rule violations are left to the checker."""
    formula_lines: list[str] = []
    a_idx: list[int] | None = None
    steps: list[DerivationStep] = []
    interps: dict[int, Formula] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "f":
            formula_lines.append(line[1:].strip())
        elif kind == "A":
            nums, k = _read_list(tok, 1, lineno)
            a_idx = [x - 1 for x in nums]
            if k != len(tok):
                raise TraceFormatError("trailing tokens", lineno)
        elif kind == "s":
            if len(tok) < 3:
                raise TraceFormatError("truncated step", lineno)
            try:
                sid = int(tok[1])
            except ValueError:
                raise TraceFormatError("bad step id", lineno) from None
            rule = tok[2]
            premises: tuple[int, ...] = ()
            pivot = None
            witness = None
            k = 3
            if rule == "R3":
                try:
                    premises = (int(tok[3]), int(tok[4]))
                    if tok[5] != "x":
                        raise ValueError
                    pivot = int(tok[6])
                except (IndexError, ValueError):
                    raise TraceFormatError("bad R3 header", lineno) from None
                k = 7
            elif rule not in ("R1", "R2"):
                raise TraceFormatError("unknown rule %r" % rule, lineno)
            clause, k = _read_list(tok, k, lineno)
            prob, k = _read_prob(tok, k, lineno)
            if rule == "R2":
                if k >= len(tok) or tok[k] != "w":
                    raise TraceFormatError("R2 step needs a witness", lineno)
                w, k = _read_list(tok, k + 1, lineno)
                witness = tuple(w)
            if k != len(tok):
                raise TraceFormatError("trailing tokens", lineno)
            if sid != len(steps) + 1:
                raise TraceFormatError("step ids must be dense and increasing", lineno)
            # Conclusions are stored unchecked so the checker can report problems.
            ac = object.__new__(AnnotatedClause)
            object.__setattr__(ac, "clause", frozenset(clause))
            object.__setattr__(ac, "prob", prob)
            steps.append(DerivationStep(sid, rule, ac, premises, pivot, witness))
        elif kind == "i":
            try:
                sid = int(tok[1])
            except (IndexError, ValueError):
                raise TraceFormatError("bad interpolant line", lineno) from None
            try:
                interps[sid] = parse_sexpr(line.split(None, 2)[2] if len(tok) > 2 else "")
            except SexprError as exc:
                raise TraceFormatError(str(exc), lineno) from None
        elif kind == "c":
            continue
        else:
            raise TraceFormatError("unknown line kind %r" % kind, lineno)
    if not formula_lines:
        raise TraceFormatError("trace does not embed its formula")
    try:
        phi = parse_sdimacs("\n".join(formula_lines))
    except SdimacsError as exc:
        raise TraceFormatError("embedded formula: %s" % exc) from None
    for sid, f in interps.items():
        if not 1 <= sid <= len(steps):
            raise TraceFormatError("interpolant for unknown step %d" % sid)
        steps[sid - 1].interpolant = f
    part = None
    if a_idx is not None:
        if any(not 0 <= i < len(phi.matrix) for i in a_idx):
            raise TraceFormatError("A-index outside the matrix")
        part = Partition.from_indices(phi.matrix, a_idx)
    if not steps:
        raise TraceFormatError("trace has no steps")
    return ProofTrace(phi, steps, part)
