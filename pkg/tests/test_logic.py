from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssatc.logic import (EXISTS, FALSE, TRUE, DuplicateBinding, LogicError, Partition, Prefix,
                         SsatFormula, TautologicalClause, UnboundVariable, VarAllocator,
                         assignments, clause_formula, cnf_formula, conj, disj, equivalent,
                         eval_clause, falsifying_assignment, lit, negate_to_cnf, neg, prefix_append,
                         random_q, split_formula, to_cnf, to_rational)
from ssatc.sdimacs import SdimacsError, parse_sdimacs, read_sdimacs, write_sdimacs

from conftest import MODELS


def test_falsifying_assignment_of_small_clause():
    assert falsifying_assignment([1, -2]) == {1: False, 2: True}
    assert falsifying_assignment([]) == {}


def test_falsifying_assignment_rejects_tautology():
    with pytest.raises(TautologicalClause):
        falsifying_assignment([3, -3])


@given(st.sets(st.integers(1, 8), max_size=6).flatmap(
    lambda vs: st.tuples(*[st.sampled_from([v, -v]) for v in sorted(vs)])))
def test_falsifying_assignment_falsifies(clause):
    assert eval_clause(clause, falsifying_assignment(clause)) is False


def test_eval_clause_three_valued():
    assert eval_clause([1, 2], {1: False}) is None
    assert eval_clause([1, 2], {1: False, 2: True}) is True
    assert eval_clause([1, 2], {1: False, 2: False}) is False


def test_prefix_append_binds_innermost():
    p = Prefix([(1, EXISTS)])
    q = prefix_append(p, [3, 2], random_q(Fraction(1, 2)))
    assert q.variables == [1, 3, 2]
    assert q.position(2) == 2
    assert q.quantifier(3).prob == Fraction(1, 2)
    assert prefix_append(p, []) is p


def test_prefix_rejects_duplicates_and_unknown_lookups():
    with pytest.raises(DuplicateBinding):
        Prefix([(1, EXISTS), (1, EXISTS)])
    with pytest.raises(UnboundVariable):
        Prefix([(1, EXISTS)]).position(2)


def test_randomized_quantifier_bounds():
    for bad in (0, 1, Fraction(3, 2)):
        with pytest.raises(LogicError):
            random_q(bad)


def test_formula_rejects_free_variables_and_tautologies():
    p = Prefix([(1, EXISTS)])
    with pytest.raises(UnboundVariable):
        SsatFormula(p, [[1, 2]])
    with pytest.raises(TautologicalClause):
        SsatFormula(p, [[1, -1]])


def test_smart_constructors_fold_constants():
    x = lit(1)
    assert conj(x, TRUE) == x
    assert conj(x, FALSE) == FALSE
    assert disj(x, lit(-1)) == TRUE
    assert conj(x, neg(x)) == FALSE
    assert neg(neg(x)) == x


def test_cnf_formula_matches_clauses():
    f = cnf_formula([[1, -2], [3]])
    assert f.eval({1: True, 2: True, 3: True})
    assert not f.eval({1: False, 2: True, 3: True})
    assert clause_formula([]) == FALSE


formulas = st.recursive(
    st.builds(lit, st.sampled_from([1, 2, 3, 4, 5, 6, -1, -2, -3, -4, -5, -6])) | st.just(TRUE),
    lambda kids: st.builds(lambda a, b: conj(a, b), kids, kids)
    | st.builds(lambda a, b: disj(a, b), kids, kids)
    | st.builds(neg, kids),
    max_leaves=10,
)


def _projected_models(clauses, base, aux):
    """Assignments of ``base`` that extend to a model of ``clauses`` over ``aux``."""
    out = set()
    for tau in assignments(base):
        for ext in assignments(aux):
            ext.update(tau)
            if all(eval_clause(c, ext) for c in clauses):
                out.add(tuple(sorted(tau.items())))
                break
    return out


@settings(max_examples=150, deadline=None)
@given(formulas)
def test_negate_to_cnf_round_trip(f):
    base = sorted(f.vars())
    alloc = VarAllocator(6)
    clauses, aux = negate_to_cnf(f, alloc)
    assert all(a > 6 for a in aux)
    expected = {tuple(sorted(t.items())) for t in assignments(base) if not f.eval(t)}
    assert _projected_models(clauses, base, aux) == expected


@settings(max_examples=150, deadline=None)
@given(formulas)
def test_to_cnf_round_trip(f):
    base = sorted(f.vars())
    clauses, aux = to_cnf(f, VarAllocator(6))
    expected = {tuple(sorted(t.items())) for t in assignments(base) if f.eval(t)}
    assert _projected_models(clauses, base, aux) == expected


def test_equivalent_by_truth_table():
    x, y = lit(1), lit(2)
    assert equivalent(neg(conj(x, y)), disj(neg(x), neg(y)))
    assert not equivalent(x, y)


@given(st.fractions(0, 1), st.fractions(0, 1), st.fractions(0, 1))
def test_fraction_mixture_stays_in_unit_interval(p, a, b):
    v = p * a + (1 - p) * b
    assert min(a, b) <= v <= max(a, b)


def test_to_rational_avoids_binary_artifacts():
    assert to_rational(0.3) == Fraction(3, 10)
    assert to_rational("0.818") == Fraction(409, 500)


def test_partition_variable_classes():
    matrix = [frozenset({3}), frozenset({1, -2}), frozenset({2}), frozenset({-3, 4})]
    part = Partition.from_indices(matrix, [0, 1])
    assert part.v_a == {1}
    assert part.v_b == {4}
    assert part.v_ab == {2, 3}
    assert part.var_class(1) == "A" and part.var_class(2) == "AB" and part.var_class(4) == "B"
    assert part.side(0) == "A" and part.side(3) == "B"


def test_split_formula_places_a_first():
    p = Prefix([(1, EXISTS), (2, EXISTS)])
    phi, part = split_formula(p, [[1]], [[-1, 2]])
    assert phi.matrix[0] == frozenset({1})
    assert part.a_clauses == {0}


# -- SDIMACS -----------------------------------------------------------------


def test_read_bundled_example():
    phi = read_sdimacs(MODELS / "ex31.sdimacs")
    assert [v for v, _ in phi.prefix] == [1, 2, 3]
    assert phi.prefix.quantifier(1).prob == Fraction(4, 5)
    assert phi.matrix == (frozenset({1, 2}), frozenset({-2}), frozenset({2, 3}))


def test_sdimacs_round_trip():
    phi = read_sdimacs(MODELS / "ex32.sdimacs")
    back = parse_sdimacs(write_sdimacs(phi, "round trip"))
    assert back.prefix == phi.prefix
    assert back.matrix == phi.matrix


def test_sdimacs_exact_probability_forms():
    phi = parse_sdimacs("p cnf 2 1\nr 1/3 1 0\nr 0.25 2 0\n1 2 0\n")
    assert phi.prefix.quantifier(1).prob == Fraction(1, 3)
    assert phi.prefix.quantifier(2).prob == Fraction(1, 4)


@pytest.mark.parametrize("text", [
    "e 1 0\n1 0\n",                          # no problem line
    "p cnf 1 2\ne 1 0\n1 0\n",               # clause count mismatch
    "p cnf 1 1\ne 2 0\n2 0\n",               # variable beyond header
    "p cnf 1 1\nr 1.5 1 0\n1 0\n",           # probability outside (0, 1)
    "p cnf 2 1\ne 1 0\n1 2 0\n",             # free variable
    "p cnf 1 1\ne 1 0\n1 x 0\n",             # garbage literal
    "p cnf 1 1\ne 1 1 0\n1 0\n",             # duplicate binding
])
def test_sdimacs_errors(text):
    with pytest.raises(SdimacsError):
        parse_sdimacs(text)
