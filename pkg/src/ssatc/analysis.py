"""Interpolation fixpoints and bound sequences for reachability and region stability."""

from __future__ import annotations

import csv
import io
import time
from decimal import Decimal, localcontext
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .encode import (REACH, STABILITY, build_backstep_query, build_kernel_avoid, build_pbmc,
                     build_upper_bound, exactly_one_formula, require_region, state_set,
                     state_set_formula)
from .logic import Formula, conj, disj, neg, to_rational
from .mdp import Mdp, MissingTarget
from .solver import check_implication, solve, solve_partitioned

DEFAULT_J = 3


class NotStabilized(RuntimeError):
    pass


class KernelNotInvariant(ValueError):
    pass


@dataclass
class FixpointIteration:
    k: int
    interpolant: Formula
    cumulative: Formula
    state_set: frozenset[str]


@dataclass
class FixpointTrace:
    mode: str
    j: int
    initial: Formula
    iterations: list[FixpointIteration] = field(default_factory=list)
    stabilized_at: int | None = None
    result: Formula | None = None
    result_set: frozenset[str] | None = None


def _stable(m: Mdp, premise: Formula, conclusion: Formula) -> bool:
    return check_implication(conj(exactly_one_formula(m), premise), conclusion,
                             range(1, len(m.states) + 1))


def _fixpoint(m: Mdp, start: Formula, j: int, max_iter: int, mode: str) -> FixpointTrace:
    tr = FixpointTrace(mode, j, start)
    current = start
    for k in range(max_iter):
        query = build_backstep_query(m, current, j, mode)
        _, interp = solve_partitioned(query.a, query.b, query.prefix, "true")
        interp = query.to_canonical(interp)
        if mode == REACH:
            nxt = disj(current, interp)
            done = _stable(m, nxt, current)
        else:
            nxt = conj(current, neg(interp))
            done = _stable(m, current, nxt)
        tr.iterations.append(FixpointIteration(k + 1, interp, nxt, state_set(m, nxt)))
        if done:
            tr.stabilized_at = k
            tr.result = current
            tr.result_set = state_set(m, current)
            return tr
        current = nxt
    raise NotStabilized("no fixpoint within %d iterations" % max_iter)


def backward_fixpoint(m: Mdp, j: int = DEFAULT_J, max_iter: int | None = None) -> FixpointTrace:
    """Over-approximate the states that can reach the target (``BReach``)."""
    if m.target is None:
        raise MissingTarget("the model declares no target states")
    if j < 1:
        raise ValueError("j must be at least 1")
    if max_iter is None:
        max_iter = len(m.states) + 1
    return _fixpoint(m, state_set_formula(m, m.target), j, max_iter, REACH)


def kernel_fixpoint(m: Mdp, j: int = DEFAULT_J, max_iter: int | None = None) -> FixpointTrace:
    """Shrink the region to an invariance kernel."""
    region = require_region(m)
    if j < 1:
        raise ValueError("j must be at least 1")
    if max_iter is None:
        max_iter = len(m.states) + 1
    return _fixpoint(m, state_set_formula(m, region), j, max_iter, STABILITY)


def verify_kernel(m: Mdp, kernel: Formula) -> bool:
    states = state_set(m, kernel)
    region = m.region if m.region is not None else frozenset(m.states)
    if not states <= region:
        return False
    return all(t in states for s in states for a in m.available(s) for t, _ in m.trans[(s, a)])


# ---------------------------------------------------------------------------
# Bound sequences


LOWER_REACH = "LowerReach"
UPPER_REACH = "UpperReach"
LOWER_STABILITY = "LowerStability"


@dataclass
class BoundEntry:
    k: int
    value: Fraction
    solve_ms: float = 0.0


@dataclass
class BoundSequence:
    kind: str
    entries: list[BoundEntry] = field(default_factory=list)

    @property
    def values(self) -> list[Fraction]:
        return [e.value for e in self.entries]

    def value_at(self, k: int) -> Fraction:
        for e in self.entries:
            if e.k == k:
                return e.value
        raise KeyError(k)

    def is_monotone(self) -> bool:
        vals = [e.value for e in sorted(self.entries, key=lambda e: e.k)]
        if self.kind == UPPER_REACH:
            return all(a >= b for a, b in zip(vals, vals[1:]))
        return all(a <= b for a, b in zip(vals, vals[1:]))


def _timed(fn):
    t0 = time.perf_counter()
    v = fn()
    return v, (time.perf_counter() - t0) * 1000.0


def _ks(k_max: int, ks: Iterable[int] | None) -> list[int]:
    return list(range(k_max + 1)) if ks is None else sorted(set(ks))


def lower_bound_reach(m: Mdp, k: int) -> BoundEntry:
    v, ms = _timed(lambda: solve(build_pbmc(m, k)).prob)
    return BoundEntry(k, v, ms)


def upper_bound_reach(m: Mdp, breach: Formula, k: int) -> BoundEntry:
    v, ms = _timed(lambda: solve(build_upper_bound(m, breach, k)).prob)
    return BoundEntry(k, v, ms)


def lower_bound_stability(m: Mdp, kernel: Formula, k: int) -> BoundEntry:
    v, ms = _timed(lambda: 1 - solve(build_kernel_avoid(m, kernel, k)).prob)
    return BoundEntry(k, v, ms)


def lower_bounds_reach(m: Mdp, k_max: int, ks: Iterable[int] | None = None) -> BoundSequence:
    return BoundSequence(LOWER_REACH, [lower_bound_reach(m, k) for k in _ks(k_max, ks)])


def upper_bounds_reach(m: Mdp, breach: Formula, k_max: int,
                       ks: Iterable[int] | None = None) -> BoundSequence:
    return BoundSequence(UPPER_REACH, [upper_bound_reach(m, breach, k) for k in _ks(k_max, ks)])


def lower_bounds_stability(m: Mdp, kernel: Formula, k_max: int, ks: Iterable[int] | None = None,
                           check_kernel: bool = False) -> BoundSequence:
    if check_kernel and not verify_kernel(m, kernel):
        raise KernelNotInvariant("the supplied kernel is not an invariance kernel")
    return BoundSequence(LOWER_STABILITY,
                         [lower_bound_stability(m, kernel, k) for k in _ks(k_max, ks)])


# ---------------------------------------------------------------------------
# Verdicts


VERIFIED = "Verified"
FALSIFIED = "Falsified"
UNKNOWN = "Unknown"


@dataclass
class Verdict:
    outcome: str
    theta: Fraction
    witness_k: int | None = None
    witness_value: Fraction | None = None
    note: str = ""

    def __post_init__(self):
        if (self.outcome in (VERIFIED, FALSIFIED)) != (self.witness_k is not None):
            raise ValueError("verdicts other than Unknown carry a witness step")


@dataclass
class SafetyReport:
    verdict: Verdict
    fixpoint: FixpointTrace
    breach: Formula
    lower: BoundSequence
    upper: BoundSequence


@dataclass
class StabilityReport:
    verdict: Verdict
    kernel: Formula
    kernel_states: frozenset[str]
    kernel_invariant: bool
    lower: BoundSequence
    fixpoint: FixpointTrace | None = None


def verify_safety(m: Mdp, theta, j: int = DEFAULT_J, k_max: int = 20,
                  max_iter: int | None = None) -> SafetyReport:
    """Decide MaxReach <= theta by interleaving lower (falsify) and upper (verify) bounds per k."""
    theta = to_rational(theta)
    fp = backward_fixpoint(m, j, max_iter)
    lower = BoundSequence(LOWER_REACH)
    upper = BoundSequence(UPPER_REACH)
    verdict = Verdict(UNKNOWN, theta, note="budget k_max=%d exhausted" % k_max)
    for k in range(k_max + 1):
        lb = lower_bound_reach(m, k)
        lower.entries.append(lb)
        if lb.value > theta:
            verdict = Verdict(FALSIFIED, theta, k, lb.value)
            break
        ub = upper_bound_reach(m, fp.result, k)
        upper.entries.append(ub)
        if ub.value <= theta:
            verdict = Verdict(VERIFIED, theta, k, ub.value)
            break
    return SafetyReport(verdict, fp, fp.result, lower, upper)


def verify_stability(m: Mdp, theta, j: int = DEFAULT_J, k_max: int = 20,
                     kernel: Formula | None = None, max_iter: int | None = None) -> StabilityReport:
    """Establish MinStable >= theta from lower bounds; this pipeline never falsifies."""
    theta = to_rational(theta)
    fp = None
    if kernel is None:
        fp = kernel_fixpoint(m, j, max_iter)
        kernel = fp.result
    invariant = verify_kernel(m, kernel)
    states = state_set(m, kernel)
    lower = BoundSequence(LOWER_STABILITY)
    if not invariant:
        verdict = Verdict(UNKNOWN, theta, note="kernel is not invariant; no bound is sound")
        return StabilityReport(verdict, kernel, states, invariant, lower, fp)
    note = "kernel empty" if not states else ""
    verdict = Verdict(UNKNOWN, theta, note=note or "budget k_max=%d exhausted" % k_max)
    for k in range(k_max + 1):
        lb = lower_bound_stability(m, kernel, k)
        lower.entries.append(lb)
        if lb.value >= theta:
            verdict = Verdict(VERIFIED, theta, k, lb.value, note)
            break
    return StabilityReport(verdict, kernel, states, invariant, lower, fp)


# ---------------------------------------------------------------------------
# CSV


CSV_HEADER = ["k", "value_exact", "value_decimal", "solve_ms"]


def decimal_str(x: Fraction, digits: int = 20) -> str:
    """``x`` rounded to ``digits`` significant digits (half-even), in positional notation."""
    x = Fraction(x)
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        d = Decimal(x.numerator) / Decimal(x.denominator)
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def bounds_to_csv(seq: BoundSequence) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for e in seq.entries:
        w.writerow([e.k, "%d/%d" % (e.value.numerator, e.value.denominator),
                    decimal_str(e.value), "%.3f" % e.solve_ms])
    return buf.getvalue()


def bounds_from_csv(text: str, kind: str) -> BoundSequence:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    return BoundSequence(kind, [BoundEntry(int(r[0]), Fraction(r[1]), float(r[3])) for r in rows[1:]])
