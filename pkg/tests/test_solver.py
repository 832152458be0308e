import random
from fractions import Fraction

import pytest

from ssatc.checker import check_proof
from ssatc.logic import (EXISTS, FALSE, Partition, Prefix, SsatFormula, VarAllocator, conj, disj, equivalent,
                         lit, negate_to_cnf, random_q, to_cnf)
from ssatc.oracle import exact_pr, is_generalized_interpolant
from ssatc.sdimacs import read_sdimacs
from ssatc.solver import (PartitionNotCovering, SolveOptions, check_implication, run_deep, solve,
                          solve_partitioned)

from conftest import MODELS, random_ssat


def test_worked_examples():
    assert solve(read_sdimacs(MODELS / "ex31.sdimacs")).prob == Fraction(6, 25)
    assert solve(read_sdimacs(MODELS / "ex32.sdimacs")).prob == Fraction(3, 25)


def test_empty_matrix_and_empty_clause():
    p = Prefix([(1, random_q(Fraction(1, 2)))])
    assert solve(SsatFormula(p, [])).prob == 1
    res = solve(SsatFormula(p, [[], [1]]), SolveOptions(emit_proof=True))
    assert res.prob == 0
    assert check_proof(res.trace).certified == 0


def test_agrees_with_oracle_and_checker():
    rng = random.Random(21)
    for _ in range(300):
        phi = random_ssat(rng, rng.randint(1, 12), rng.randint(0, 16))
        res = solve(phi, SolveOptions(emit_proof=True))
        assert res.prob == exact_pr(phi)
        rep = check_proof(res.trace)
        assert rep.accepted and rep.certified == res.prob


def _pivot_paths(trace):
    """Pivot sequences from the root step down to each leaf."""
    by_id = {s.id: s for s in trace.steps}

    def walk(st):
        if st.rule != "R3":
            return [[]]
        out = []
        for pid in st.premises:
            for path in walk(by_id[pid]):
                out.append([st.pivot] + path)
        return out

    return walk(trace.steps[-1])


def test_pivots_follow_prefix_order_along_every_path():
    rng = random.Random(22)
    for _ in range(60):
        phi = random_ssat(rng, rng.randint(2, 8), rng.randint(2, 10))
        res = solve(phi, SolveOptions(emit_proof=True))
        pos = phi.prefix.position
        for path in _pivot_paths(res.trace):
            # root first: pivots are bound from outermost to innermost
            assert all(pos(a) < pos(b) for a, b in zip(path, path[1:]))


def test_thresholding_is_consistent_with_oracle():
    rng = random.Random(23)
    cuts = [Fraction(0), Fraction(1, 10), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]
    for _ in range(150):
        phi = random_ssat(rng, rng.randint(1, 10), rng.randint(1, 14))
        exact = exact_pr(phi)
        lo, hi = sorted(rng.sample(cuts, 2))
        res = solve(phi, SolveOptions(pruning=(lo, hi)))
        if res.kind == "exact":
            assert lo < res.prob < hi and res.prob == exact
        elif res.kind == "at_least":
            assert hi <= res.prob <= exact
        else:
            assert exact <= res.prob <= lo
        if lo < exact < hi:
            assert res.kind == "exact"


def test_option_validation():
    with pytest.raises(ValueError):
        SolveOptions(emit_interpolant=True)
    with pytest.raises(ValueError):
        SolveOptions(emit_proof=True, pruning=(0, 1))
    with pytest.raises(ValueError):
        SolveOptions(pruning=(Fraction(1, 2), Fraction(1, 2)))


def test_ex32_interpolants_for_both_policies():
    phi = read_sdimacs(MODELS / "ex32.sdimacs")
    part = Partition.from_indices(phi.matrix, [0, 1])
    for policy, expected in (("true", disj(lit(-2), lit(3))), ("false", lit(-2))):
        res = solve(phi, SolveOptions(emit_proof=True, emit_interpolant=True, dc_policy=policy), part)
        assert res.prob == Fraction(3, 25)
        assert equivalent(res.interpolant, expected, [2, 3])
        assert is_generalized_interpolant(res.interpolant, phi, part)


def _random_partition(rng, phi):
    k = len(phi.matrix)
    a = rng.sample(range(k), rng.randint(0, k))
    return Partition.from_indices(phi.matrix, a)


def _control_holds(phi, part, interp, policy):
    """dc=true: Pr(Q : A & ~I) = 0; dc=false: Pr(Q : I & B) = 0."""
    last = max([phi.num_vars] + list(interp.vars()))
    alloc = VarAllocator(last)
    if policy == "true":
        side = [phi.matrix[i] for i in sorted(part.a_clauses)]
        extra, aux = negate_to_cnf(interp, alloc)
    else:
        side = [phi.matrix[i] for i in sorted(part.b_clauses)]
        extra, aux = to_cnf(interp, alloc)
    prefix = phi.prefix.append(aux, EXISTS)
    return exact_pr(SsatFormula(prefix, list(side) + extra), cap=None) == 0


def test_interpolants_are_generalized_and_controlled():
    rng = random.Random(24)
    for _ in range(120):
        phi = random_ssat(rng, rng.randint(1, 8), rng.randint(1, 10))
        part = _random_partition(rng, phi)
        for policy in ("true", "false"):
            res = solve(phi, SolveOptions(emit_proof=True, emit_interpolant=True, dc_policy=policy), part)
            assert res.interpolant.vars() <= part.v_ab
            assert is_generalized_interpolant(res.interpolant, phi, part)
            assert check_proof(res.trace).accepted
            assert _control_holds(phi, part, res.interpolant, policy)


def test_classical_interpolant_when_a_is_unsatisfiable():
    # A = (x) & (~x | y) & (~y), B = (x | z): the interpolant must be false
    prefix = Prefix([(1, EXISTS), (2, random_q(Fraction(1, 2))), (3, EXISTS)])
    p, interp = solve_partitioned([[1], [-1, 2], [-2]], [[1, 3]], prefix)
    assert p == 0
    assert equivalent(interp, FALSE, [1])


def test_solve_partitioned_requires_bound_variables():
    with pytest.raises(PartitionNotCovering):
        solve_partitioned([[1]], [[2]], Prefix([(1, EXISTS)]))


def test_check_implication():
    x, y = lit(1), lit(2)
    assert check_implication(conj(x, y), x)
    assert not check_implication(x, conj(x, y))
    assert check_implication(x, disj(x, y))
    assert check_implication(conj(x, ~x), y)


def test_deep_recursion_runs_in_worker_thread():
    n = 3000
    prefix = Prefix([(v, EXISTS) for v in range(1, n + 1)])
    chain = [[-v, v + 1] for v in range(1, n)] + [[1], [n]]
    phi = SsatFormula(prefix, chain)
    assert solve(phi).prob == 1
    assert run_deep(lambda: 7, depth=5000) == 7
