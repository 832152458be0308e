"""Shared fixtures and random instance generators."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest

from ssatc.logic import EXISTS, Prefix, SsatFormula, random_q
from ssatc.mdp import Mdp, read_mdp

MODELS = Path(__file__).resolve().parent.parent / "models"

# Filled by test_acceptance.py, one PASS/FAIL line per criterion.
ACCEPTANCE_LINES: list[str] = []

PROBS = [Fraction(1, 2), Fraction(1, 4), Fraction(3, 4), Fraction(3, 10), Fraction(4, 5), Fraction(1, 3)]


def random_ssat(rng: random.Random, n_vars: int, n_clauses: int, max_len: int = 3) -> SsatFormula:
    """Random prefix order and quantifiers over 1..n_vars, random non-tautological clauses."""
    order = list(range(1, n_vars + 1))
    rng.shuffle(order)
    bindings = [(v, EXISTS if rng.random() < 0.5 else random_q(rng.choice(PROBS))) for v in order]
    clauses = []
    for _ in range(n_clauses):
        vs = rng.sample(range(1, n_vars + 1), rng.randint(1, min(max_len, n_vars)))
        clauses.append([v if rng.random() < 0.5 else -v for v in vs])
    return SsatFormula(Prefix(bindings), clauses)


def random_mdp(rng: random.Random, n_states: int, n_actions: int) -> Mdp:
    states = tuple("s%d" % k for k in range(n_states))
    actions = tuple("a%d" % k for k in range(n_actions))
    trans = {}
    for s in states:
        avail = [a for a in actions if rng.random() < 0.7] or [rng.choice(actions)]
        for a in avail:
            succ = rng.sample(states, rng.randint(1, min(3, n_states)))
            weights = [rng.randint(1, 4) for _ in succ]
            total = sum(weights)
            trans[(s, a)] = tuple((t, Fraction(w, total)) for t, w in zip(succ, weights))
    target = frozenset(rng.sample(states, rng.randint(1, max(1, n_states - 1))))
    region = frozenset(rng.sample(states, rng.randint(1, n_states)))
    init = rng.choice(states)
    return Mdp(states, init, actions, trans, target, region)


@pytest.fixture(scope="session")
def fig3() -> Mdp:
    return read_mdp(MODELS / "fig3.mdp")


@pytest.fixture
def models() -> Path:
    return MODELS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
