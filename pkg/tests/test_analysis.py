import random
from fractions import Fraction

import pytest

from ssatc.analysis import (FALSIFIED, LOWER_REACH, UNKNOWN, UPPER_REACH, VERIFIED, BoundEntry,
                            BoundSequence, KernelNotInvariant, Verdict, backward_fixpoint,
                            bounds_from_csv, bounds_to_csv, decimal_str, kernel_fixpoint,
                            lower_bounds_reach, lower_bounds_stability, upper_bounds_reach,
                            verify_kernel, verify_safety, verify_stability)
from ssatc.encode import parse_state_formula, state_set
from ssatc.mdp import Mdp, MissingRegion, MissingTarget
from ssatc.oracle import mdp_backward_set, mdp_max_kernel, mdp_max_reach_bounded, mdp_min_reach_bounded

from conftest import random_mdp

F = Fraction


# -- fixpoints -----------------------------------------------------------------------


@pytest.mark.parametrize("j, expected", [(1, {"i", "f", "e", "s"}), (2, {"i", "e", "s"}),
                                         (3, {"i", "e", "s"}), (4, {"i", "e", "s"})])
def test_fig3_backward_fixpoint(fig3, j, expected):
    tr = backward_fixpoint(fig3, j)
    assert tr.result_set == expected
    assert state_set(fig3, tr.result) == expected
    assert tr.stabilized_at is not None


def test_fig3_first_iteration_with_j3(fig3):
    tr = backward_fixpoint(fig3, 3)
    assert tr.iterations[0].state_set == {"e", "s"}


@pytest.mark.parametrize("j, expected", [(1, set()), (2, set()), (3, {"s"}), (4, {"s"})])
def test_fig3_kernel_fixpoint(fig3, j, expected):
    tr = kernel_fixpoint(fig3, j)
    assert tr.result_set == expected
    assert verify_kernel(fig3, tr.result)


def test_fixpoints_need_target_and_region(fig3):
    bare = Mdp(fig3.states, fig3.init, fig3.actions, fig3.trans)
    with pytest.raises(MissingTarget):
        backward_fixpoint(bare)
    with pytest.raises(MissingRegion):
        kernel_fixpoint(bare)
    with pytest.raises(ValueError):
        backward_fixpoint(fig3, 0)


def test_backward_fixpoint_overapproximates_on_random_models():
    rng = random.Random(41)
    for _ in range(8):
        m = random_mdp(rng, rng.randint(1, 4), rng.randint(1, 2))
        truth = mdp_backward_set(m, m.target)
        for j in (1, 2, 3, 4):
            assert backward_fixpoint(m, j).result_set >= truth


def test_kernel_fixpoint_is_sound_on_random_models():
    rng = random.Random(42)
    for _ in range(8):
        m = random_mdp(rng, rng.randint(1, 4), rng.randint(1, 2))
        best = mdp_max_kernel(m, m.region)
        for j in (1, 2, 3):
            tr = kernel_fixpoint(m, j)
            assert verify_kernel(m, tr.result)
            assert tr.result_set <= best


# -- bound sequences ------------------------------------------------------------------


def test_fig3_lower_bounds(fig3):
    seq = lower_bounds_reach(fig3, 5)
    assert seq.values == [0, 0, F(27, 50), F(27, 50), F(693, 1000), F(693, 1000)]
    assert seq.is_monotone()


def test_fig3_upper_bounds(fig3):
    breach = parse_state_formula(fig3, "~f | s")
    seq = upper_bounds_reach(fig3, breach, 6)
    assert seq.values == [1, F(9, 10), F(9, 10), F(171, 200), F(171, 200), F(3339, 4000), F(3339, 4000)]
    assert seq.is_monotone()


def test_fig3_stability_bounds(fig3):
    kernel = parse_state_formula(fig3, "s")
    seq = lower_bounds_stability(fig3, kernel, 5)
    assert seq.values == [0, 0, F(9, 20), F(9, 20), F(27, 50), F(27, 50)]
    with pytest.raises(KernelNotInvariant):
        lower_bounds_stability(fig3, parse_state_formula(fig3, "e | s"), 1, check_kernel=True)


def test_bound_subsets(fig3):
    assert lower_bounds_reach(fig3, 0, ks=[4, 2]).values == [F(27, 50), F(693, 1000)]


def test_sandwich_and_monotonicity_on_random_models():
    rng = random.Random(43)
    for _ in range(8):
        m = random_mdp(rng, rng.randint(1, 4), rng.randint(1, 2))
        fp = backward_fixpoint(m, 2)
        lo = lower_bounds_reach(m, 4)
        up = upper_bounds_reach(m, fp.result, 4)
        assert lo.is_monotone() and up.is_monotone()
        assert all(a <= b for a in lo.values for b in up.values)
        assert lo.values == [mdp_max_reach_bounded(m, m.target, k) for k in range(5)]


def test_stability_bounds_respect_the_maximal_kernel():
    rng = random.Random(44)
    for _ in range(8):
        m = random_mdp(rng, rng.randint(1, 4), rng.randint(1, 2))
        kern = kernel_fixpoint(m, 3).result
        seq = lower_bounds_stability(m, kern, 4)
        best = mdp_max_kernel(m, m.region)
        assert seq.is_monotone()
        for e in seq.entries:
            assert e.value <= mdp_min_reach_bounded(m, best, e.k)


# -- verdicts -------------------------------------------------------------------------


def test_safety_verified(fig3):
    rep = verify_safety(fig3, "0.9", j=3, k_max=5)
    assert rep.verdict.outcome == VERIFIED
    assert rep.verdict.witness_k == 1 and rep.verdict.witness_value == F(9, 10)
    assert state_set(fig3, rep.breach) == {"i", "e", "s"}


def test_safety_falsified(fig3):
    rep = verify_safety(fig3, 0.5, k_max=5)
    assert rep.verdict.outcome == FALSIFIED
    assert rep.verdict.witness_k == 2 and rep.verdict.witness_value == F(27, 50)


def test_safety_threshold_just_below_the_limit_is_falsified(fig3):
    # MaxReach = 9/11 > 0.818, so no upper bound can ever verify this threshold.
    rep = verify_safety(fig3, "0.818", k_max=40)
    assert rep.verdict.outcome == FALSIFIED
    assert rep.verdict.witness_k == 22
    assert rep.verdict.witness_value > F(818, 1000)


def test_safety_unknown_when_budget_runs_out(fig3):
    rep = verify_safety(fig3, "0.8", k_max=3)
    assert rep.verdict.outcome == UNKNOWN


def test_stability_verdicts(fig3):
    assert verify_stability(fig3, "0.54", k_max=10).verdict.outcome == VERIFIED
    assert verify_stability(fig3, "0.54", k_max=10).verdict.witness_k == 4
    assert verify_stability(fig3, "0.55", k_max=10).verdict.outcome == UNKNOWN


def test_stability_with_empty_kernel_stays_unknown(fig3):
    rep = verify_stability(fig3, "0.1", j=1, k_max=3)
    assert rep.kernel_states == set()
    assert rep.verdict.outcome == UNKNOWN
    assert all(e.value == 0 for e in rep.lower.entries)


def test_stability_with_non_invariant_kernel(fig3):
    rep = verify_stability(fig3, "0.1", kernel=parse_state_formula(fig3, "e | s"))
    assert not rep.kernel_invariant
    assert rep.verdict.outcome == UNKNOWN


def test_verdict_requires_witness():
    with pytest.raises(ValueError):
        Verdict(VERIFIED, F(1, 2))


# -- output -----------------------------------------------------------------------------


def test_decimal_formatting():
    assert decimal_str(F(6, 25)) == "0.24"
    assert decimal_str(F(9, 11)) == "0.81818181818181818182"
    assert decimal_str(F(0)) == "0"
    assert decimal_str(F(1)) == "1"


def test_csv_round_trip(fig3):
    seq = lower_bounds_reach(fig3, 6)
    back = bounds_from_csv(bounds_to_csv(seq), LOWER_REACH)
    assert [(e.k, e.value) for e in back.entries] == [(e.k, e.value) for e in seq.entries]
    with pytest.raises(ValueError):
        bounds_from_csv("a,b\n", LOWER_REACH)


def test_monotonicity_flags_violations():
    bad = BoundSequence(UPPER_REACH, [BoundEntry(0, F(1, 2)), BoundEntry(1, F(3, 4))])
    assert not bad.is_monotone()
    assert bad.value_at(1) == F(3, 4)
