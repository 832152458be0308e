"""Finite Markov decision processes with exact rational transition weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .sdimacs import parse_prob


class MdpError(ValueError):
    pass


class ParseError(MdpError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(msg if line is None else "line %d: %s" % (line, msg))


class DistributionSumError(MdpError):
    def __init__(self, state: str, action: str, total: Fraction):
        self.state, self.action, self.total = state, action, total
        super().__init__("distribution of (%s, %s) sums to %s" % (state, action, total))


class UnknownState(MdpError):
    pass


class MissingTarget(MdpError):
    pass


class MissingRegion(MdpError):
    pass


@dataclass(frozen=True)
class Mdp:
    """``trans[(s, a)]`` is a tuple of ``(successor, weight)`` pairs in declaration order."""

    states: tuple[str, ...]
    init: str
    actions: tuple[str, ...]
    trans: Mapping[tuple[str, str], tuple[tuple[str, Fraction], ...]]
    target: frozenset[str] | None = None
    region: frozenset[str] | None = None
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(self.states)})
        self.validate()

    def validate(self) -> None:
        if len(set(self.states)) != len(self.states) or not self.states:
            raise MdpError("states must be non-empty and distinct")
        if len(set(self.actions)) != len(self.actions) or not self.actions:
            raise MdpError("actions must be non-empty and distinct")
        known = set(self.states)
        if self.init not in known:
            raise UnknownState("initial state %r is not declared" % self.init)
        for name, group in (("target", self.target), ("region", self.region)):
            if group is not None and not group <= known:
                raise UnknownState("%s mentions undeclared states %s" % (name, sorted(group - known)))
        for (s, a), dist in self.trans.items():
            if s not in known:
                raise UnknownState("unknown state %r" % s)
            if a not in self.actions:
                raise MdpError("unknown action %r" % a)
            for t, w in dist:
                if t not in known:
                    raise UnknownState("unknown state %r" % t)
                if w <= 0:
                    raise MdpError("non-positive weight for (%s, %s, %s)" % (s, a, t))
            total = sum((w for _, w in dist), Fraction(0))
            if total != 1:
                raise DistributionSumError(s, a, total)
        for s in self.states:
            if not self.available(s):
                raise MdpError("state %r has no available action" % s)

    def index(self, s: str) -> int:
        return self._index[s]

    def available(self, s: str) -> list[str]:
        return [a for a in self.actions if (s, a) in self.trans]

    def ps(self, s: str, a: str, t: str) -> Fraction:
        return sum((w for u, w in self.trans.get((s, a), ()) if u == t), Fraction(0))

    def successors(self, s: str) -> set[str]:
        return {t for a in self.available(s) for t, _ in self.trans[(s, a)]}

    def with_target(self, target) -> "Mdp":
        return Mdp(self.states, self.init, self.actions, self.trans, frozenset(target), self.region)

    def with_region(self, region) -> "Mdp":
        return Mdp(self.states, self.init, self.actions, self.trans, self.target, frozenset(region))


def parse_mdp(text: str) -> Mdp:
    states: list[str] | None = None
    actions: list[str] | None = None
    init = None
    target = region = None
    rows: dict[tuple[str, str], list[tuple[str, Fraction]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key == "states":
            if states is not None or not rest:
                raise ParseError("states declared twice or empty", lineno)
            states = rest
        elif key == "actions":
            if actions is not None or not rest:
                raise ParseError("actions declared twice or empty", lineno)
            actions = rest
        elif key == "init":
            if len(rest) != 1:
                raise ParseError("init takes exactly one state", lineno)
            init = rest[0]
        elif key == "target":
            target = frozenset(rest)
        elif key == "region":
            region = frozenset(rest)
        elif key == "trans":
            if len(rest) != 4:
                raise ParseError("trans needs <state> <action> <succ> <prob>", lineno)
            s, a, t, p = rest
            if states is None or actions is None:
                raise ParseError("trans before states/actions", lineno)
            for name in (s, t):
                if name not in states:
                    raise UnknownState("line %d: unknown state %r" % (lineno, name))
            if a not in actions:
                raise ParseError("unknown action %r" % a, lineno)
            try:
                w = parse_prob(p)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            dist = rows.setdefault((s, a), [])
            if any(u == t for u, _ in dist):
                raise ParseError("duplicate transition %s %s %s" % (s, a, t), lineno)
            dist.append((t, w))
        else:
            raise ParseError("unknown directive %r" % key, lineno)
    if states is None or actions is None or init is None:
        raise ParseError("states, actions and init are required")
    return Mdp(tuple(states), init, tuple(actions),
               {k: tuple(v) for k, v in rows.items()}, target, region)


def read_mdp(path) -> Mdp:
    with open(path) as fh:
        return parse_mdp(fh.read())


def format_mdp(m: Mdp) -> str:
    lines = ["states " + " ".join(m.states), "init " + m.init, "actions " + " ".join(m.actions)]
    if m.target is not None:
        lines.append("target " + " ".join(s for s in m.states if s in m.target))
    if m.region is not None:
        lines.append("region " + " ".join(s for s in m.states if s in m.region))
    for (s, a), dist in m.trans.items():
        for t, w in dist:
            lines.append("trans %s %s %s %s" % (s, a, t, w))
    return "\n".join(lines) + "\n"
