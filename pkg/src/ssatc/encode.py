"""SSAT encodings of MDPs as one-hot step unrollings, plus the interpolation queries.

State variables of the canonical copy are ``1..|S|`` in declaration order.
An unrolling of depth ``k`` lays out, for each step ``t``, a block of
transition selectors (existential action bits, then randomized chain
variables) followed by the ``|S|`` state variables of copy ``t``.
Copy 0 has no transition block.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .logic import (EXISTS, FALSE, And, Const, Formula, Lit, Not, Prefix, Quantifier, SsatFormula,
                    VarAllocator, conj, disj, lit, neg, random_q, rename, to_cnf)
from .mdp import MissingRegion, MissingTarget, Mdp

REACH = "reach"
STABILITY = "stability"


@dataclass(frozen=True)
class Chain:
    """Binary chain of randomized variables realizing one distribution.

    Variable ``k`` true selects successor ``k``; all variables false select
    the last successor.
    """

    state: str
    actions: tuple[str, ...]  # actions sharing this distribution (all of them for a shared chain)
    shared: bool
    successors: tuple[str, ...]
    probs: tuple[Fraction, ...]  # conditional probability of each chain variable

    @property
    def size(self) -> int:
        return len(self.probs)


def chain_probs(weights: Sequence[Fraction]) -> list[Fraction]:
    """Conditional probabilities ``w_i / remaining mass`` for all but the last successor."""
    out = []
    rest = Fraction(1)
    for w in weights[:-1]:
        out.append(Fraction(w) / rest)
        rest -= w
    return out


def leaf_products(probs: Sequence[Fraction]) -> list[Fraction]:
    out = []
    stay = Fraction(1)
    for p in probs:
        out.append(stay * p)
        stay *= 1 - p
    out.append(stay)
    return out


def exactly_one(vars_: Sequence[int]) -> list[frozenset[int]]:
    out = [frozenset(vars_)]
    for a in range(len(vars_)):
        for b in range(a + 1, len(vars_)):
            out.append(frozenset((-vars_[a], -vars_[b])))
    return out


@dataclass
class StepEncoding:
    """Templates over the depth-one layout: ``s`` = 1..n, selectors, then ``s'``."""

    mdp: Mdp
    n_bits: int
    chains: list[Chain]
    state_vars: list[int] = field(default_factory=list)
    nd_vars: list[int] = field(default_factory=list)
    pr_vars: list[int] = field(default_factory=list)
    next_vars: list[int] = field(default_factory=list)
    init_clauses: list[frozenset[int]] = field(default_factory=list)
    trans_clauses: list[frozenset[int]] = field(default_factory=list)
    target_clauses: list[frozenset[int]] = field(default_factory=list)
    region_clauses: list[frozenset[int]] = field(default_factory=list)
    prefix_template: list[list[tuple[int, Quantifier]]] = field(default_factory=list)

    @property
    def n_states(self) -> int:
        return len(self.mdp.states)

    @property
    def n_sel(self) -> int:
        return self.n_bits + sum(c.size for c in self.chains)

    @property
    def width(self) -> int:
        return self.n_states + self.n_sel


def _codeword_action(avail: Sequence[str], code: int) -> str:
    return avail[min(code, len(avail) - 1)]


def _chains(m: Mdp) -> list[Chain]:
    out = []
    for s in m.states:
        avail = m.available(s)
        dists = [m.trans[(s, a)] for a in avail]
        if all(d == dists[0] for d in dists):
            groups = [(tuple(avail), True, dists[0])]
        else:
            groups = [((a,), False, d) for a, d in zip(avail, dists)]
        for acts, shared, dist in groups:
            succ = tuple(t for t, _ in dist)
            out.append(Chain(s, acts, shared, succ, tuple(chain_probs([w for _, w in dist]))))
    return out


def encode_step(m: Mdp) -> StepEncoding:
    n = len(m.states)
    n_bits = math.ceil(math.log2(len(m.actions))) if len(m.actions) > 1 else 0
    enc = StepEncoding(m, n_bits, _chains(m))
    enc.state_vars = list(range(1, n + 1))
    enc.nd_vars = list(range(n + 1, n + 1 + n_bits))
    enc.pr_vars = list(range(n + 1 + n_bits, n + 1 + enc.n_sel))
    enc.next_vars = list(range(n + enc.n_sel + 1, 2 * n + enc.n_sel + 1))
    layout = Layout(enc)
    enc.init_clauses = layout.init()
    enc.trans_clauses = layout.trans(1)
    if m.target is not None:
        enc.target_clauses = [frozenset(enc.state_vars[m.index(s)] for s in m.target)]
    if m.region is not None:
        enc.region_clauses = [frozenset(enc.state_vars[m.index(s)] for s in m.region)]
    enc.prefix_template = [layout.state_block(0), layout.sel_block(1), layout.state_block(1)]
    return enc


class Layout:
    """Variable numbering and clause generation for unrollings of a step encoding."""

    def __init__(self, enc: StepEncoding):
        self.enc = enc
        self.m = enc.mdp

    def state_var(self, t: int, s: int | str) -> int:
        j = self.m.index(s) if isinstance(s, str) else s
        return t * self.enc.width + j + 1

    def state_vars(self, t: int) -> list[int]:
        return [self.state_var(t, j) for j in range(self.enc.n_states)]

    def sel_base(self, t: int) -> int:
        """Number of the variable just before step ``t``'s selector block (t >= 1)."""
        return (t - 1) * self.enc.width + self.enc.n_states

    def act_var(self, t: int, bit: int) -> int:
        return self.sel_base(t) + bit + 1

    def chain_var(self, t: int, chain: int, k: int) -> int:
        off = self.enc.n_bits + sum(c.size for c in self.enc.chains[:chain])
        return self.sel_base(t) + off + k + 1

    def last_var(self, depth: int) -> int:
        return self.state_var(depth, self.enc.n_states - 1)

    # -- blocks ---------------------------------------------------------------

    def state_block(self, t: int) -> list[tuple[int, Quantifier]]:
        return [(v, EXISTS) for v in self.state_vars(t)]

    def sel_block(self, t: int) -> list[tuple[int, Quantifier]]:
        out = [(self.act_var(t, b), EXISTS) for b in range(self.enc.n_bits)]
        for ci, ch in enumerate(self.enc.chains):
            out.extend((self.chain_var(t, ci, k), random_q(p)) for k, p in enumerate(ch.probs))
        return out

    def prefix(self, depth: int, aux_by_step: dict[int, list[int]] | None = None) -> Prefix:
        aux_by_step = aux_by_step or {}
        bindings = self.state_block(0) + [(v, EXISTS) for v in aux_by_step.get(0, [])]
        for t in range(1, depth + 1):
            bindings += self.sel_block(t) + self.state_block(t)
            bindings += [(v, EXISTS) for v in aux_by_step.get(t, [])]
        return Prefix(bindings)

    # -- clauses --------------------------------------------------------------

    def init(self) -> list[frozenset[int]]:
        out = [frozenset((self.state_var(0, s) if s == self.m.init else -self.state_var(0, s),))
               for s in self.m.states]
        return out + exactly_one(self.state_vars(0))

    def trans(self, t: int) -> list[frozenset[int]]:
        """Clauses of Trans(s_{t-1}, selectors_t, s_t), including exactly-one on s_t."""
        out: list[frozenset[int]] = []
        n_codes = 1 << self.enc.n_bits
        for ci, ch in enumerate(self.enc.chains):
            src = -self.state_var(t - 1, ch.state)
            if ch.shared:
                guards = [()]
            else:
                avail = self.m.available(ch.state)
                guards = [self._code_guard(t, code) for code in range(n_codes)
                          if _codeword_action(avail, code) == ch.actions[0]]
            rvars = [self.chain_var(t, ci, k) for k in range(ch.size)]
            for k, succ in enumerate(ch.successors):
                path = rvars[:k] + ([-rvars[k]] if k < ch.size else [])
                for guard in guards:
                    out.append(frozenset((src, *guard, *path, self.state_var(t, succ))))
        return out + exactly_one(self.state_vars(t))

    def _code_guard(self, t: int, code: int) -> tuple[int, ...]:
        # Bit value 0 is the positive literal, so action index 0 is ``act`` true.
        return tuple(-self.act_var(t, b) if not (code >> b) & 1 else self.act_var(t, b)
                     for b in range(self.enc.n_bits))

    def at_step(self, f: Formula, t: int) -> Formula:
        """Copy of a canonical state predicate over the state variables of step ``t``."""
        return rename(f, {j + 1: self.state_var(t, j) for j in range(self.enc.n_states)})

    def to_canonical(self, f: Formula, t: int) -> Formula:
        return rename(f, {self.state_var(t, j): j + 1 for j in range(self.enc.n_states)})

    def step_of(self, v: int) -> int:
        return (v - 1) // self.enc.width


# ---------------------------------------------------------------------------
# State-set predicates


def state_set_formula(m: Mdp, states: Iterable[str]) -> Formula:
    """Disjunction of the canonical one-hot literals of ``states`` (false if empty)."""
    return disj(*(lit(m.index(s) + 1) for s in m.states if s in set(states)))


def one_hot_points(m: Mdp):
    n = len(m.states)
    for j, s in enumerate(m.states):
        yield s, {v: (v == j + 1) for v in range(1, n + 1)}


def state_set(m: Mdp, f: Formula) -> frozenset[str]:
    """States whose one-hot valuation satisfies the canonical predicate ``f``."""
    return frozenset(s for s, tau in one_hot_points(m) if f.eval(tau))


def exactly_one_formula(m: Mdp) -> Formula:
    vs = list(range(1, len(m.states) + 1))
    alo = disj(*(lit(v) for v in vs))
    amo = conj(*(disj(lit(-a), lit(-b)) for i, a in enumerate(vs) for b in vs[i + 1:]))
    return conj(alo, amo)


def parse_state_formula(m: Mdp, text: str) -> Formula:
    """Predicate from a state-name expression: names, ``~``/``!``, ``&``, ``|``, parentheses,
    ``true``/``false``.  ``~`` binds tightest, then ``&``, then ``|``."""
    tokens = re.findall(r"[A-Za-z_][A-Za-z0-9_]*|[~!&|()]", text)
    if "".join(tokens) != re.sub(r"\s+", "", text):
        raise ValueError("unexpected characters in state predicate %r" % text)
    pos = 0

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def take():
        nonlocal pos
        pos += 1
        return tokens[pos - 1]

    def atom() -> Formula:
        tok = peek()
        if tok is None:
            raise ValueError("unexpected end of state predicate")
        take()
        if tok in ("~", "!"):
            return neg(atom())
        if tok == "(":
            f = disjunction()
            if peek() != ")":
                raise ValueError("missing ) in state predicate")
            take()
            return f
        if tok == "true":
            return conj()
        if tok == "false":
            return FALSE
        if tok not in m.states:
            raise ValueError("unknown state %r" % tok)
        return lit(m.index(tok) + 1)

    def conjunction() -> Formula:
        parts = [atom()]
        while peek() == "&":
            take()
            parts.append(atom())
        return conj(*parts)

    def disjunction() -> Formula:
        parts = [conjunction()]
        while peek() == "|":
            take()
            parts.append(conjunction())
        return disj(*parts)

    f = disjunction()
    if pos != len(tokens):
        raise ValueError("trailing tokens in state predicate")
    return f


def format_state_formula(m: Mdp, f: Formula) -> str:
    def go(g: Formula, ctx: str) -> str:
        if isinstance(g, Const):
            return "true" if g.value else "false"
        if isinstance(g, Lit):
            name = m.states[abs(g.lit) - 1]
            return name if g.lit > 0 else "~" + name
        if isinstance(g, Not):
            return "~(" + go(g.child, "") + ")"
        if isinstance(g, And):
            s = " & ".join(go(a, "&") for a in g.args)
            return "(" + s + ")" if ctx == "~" else s
        s = " | ".join(go(a, "|") for a in g.args)
        return "(" + s + ")" if ctx == "&" else s

    return go(f, "")


# ---------------------------------------------------------------------------
# Unrolled formulas


class _Builder:
    def __init__(self, m: Mdp, depth: int):
        self.enc = encode_step(m)
        self.lay = Layout(self.enc)
        self.depth = depth
        self.alloc = VarAllocator(self.lay.last_var(depth))
        self.aux: dict[int, list[int]] = {}

    def base(self, first: int = 1) -> list[frozenset[int]]:
        out = self.lay.init() if first == 1 else []
        for t in range(first, self.depth + 1):
            out += self.lay.trans(t)
        return out

    def cnf(self, f: Formula) -> list[frozenset[int]]:
        """CNF of ``f`` with each auxiliary bound right after the latest state copy it depends on."""
        clauses, aux = to_cnf(f, self.alloc)
        if aux:
            defs: dict[int, list[frozenset[int]]] = {a: [] for a in aux}
            for c in clauses:
                for l in c:
                    if l < 0 and -l in defs:
                        defs[-l].append(c)
            step: dict[int, int] = {}
            for a in sorted(aux):  # children are allocated before their parents
                deps = [step[abs(l)] if abs(l) in step else self.lay.step_of(abs(l))
                        for c in defs[a] for l in c if abs(l) != a]
                step[a] = max(deps, default=0)
                self.aux.setdefault(step[a], []).append(a)
        return clauses

    def formula(self, clauses: list[frozenset[int]]) -> SsatFormula:
        return SsatFormula(self.lay.prefix(self.depth, self.aux), clauses)


def build_pbmc(m: Mdp, k: int) -> SsatFormula:
    """Init & Trans^k & (Target(s_0) | ... | Target(s_k))."""
    if m.target is None:
        raise MissingTarget("the model declares no target states")
    b = _Builder(m, k)
    target = state_set_formula(m, m.target)
    hit = disj(*(b.lay.at_step(target, t) for t in range(k + 1)))
    return b.formula(b.base() + b.cnf(hit))


def build_upper_bound(m: Mdp, breach: Formula, k: int) -> SsatFormula:
    """Init & Trans^k & BReach(s_0) & ... & BReach(s_k)."""
    b = _Builder(m, k)
    stay = []
    for t in range(k + 1):
        stay += b.cnf(b.lay.at_step(breach, t))
    return b.formula(b.base() + stay)


def build_kernel_avoid(m: Mdp, kernel: Formula, k: int) -> SsatFormula:
    """Init & Trans^k & ~Kernel(s_0) & ... & ~Kernel(s_k)."""
    b = _Builder(m, k)
    avoid = []
    for t in range(k + 1):
        avoid += b.cnf(neg(b.lay.at_step(kernel, t)))
    return b.formula(b.base() + avoid)


@dataclass
class BackstepQuery:
    a: list[frozenset[int]]
    b: list[frozenset[int]]
    prefix: Prefix
    common: list[int]  # the state variables of copy j-1
    layout: Layout
    j: int

    def __iter__(self):
        return iter((self.a, self.b, self.prefix))

    def to_canonical(self, f: Formula) -> Formula:
        return self.layout.to_canonical(f, self.j - 1)


def build_backstep_query(m: Mdp, bk: Formula, j: int, mode: str = REACH) -> BackstepQuery:
    """A = Trans(s_{j-1}, t_j, s_j) & CNF(P(s_j)) and B = Init & Trans^{j-1}.

    ``P`` is ``bk`` in reach mode and its negation in stability mode.
    """
    if j < 1:
        raise ValueError("j must be at least 1")
    if mode not in (REACH, STABILITY):
        raise ValueError("unknown mode %r" % mode)
    b = _Builder(m, j)
    pred = b.lay.at_step(bk, j)
    a_part = b.lay.trans(j) + b.cnf(pred if mode == REACH else neg(pred))
    b_part = b.lay.init()
    for t in range(1, j):
        b_part += b.lay.trans(t)
    prefix = b.lay.prefix(j, b.aux)
    return BackstepQuery(a_part, b_part, prefix, b.lay.state_vars(j - 1), b.lay, j)


def require_region(m: Mdp) -> frozenset[str]:
    if m.region is None:
        raise MissingRegion("the model declares no region")
    return m.region
