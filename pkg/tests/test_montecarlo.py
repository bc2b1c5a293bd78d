import math

import numpy as np
import pytest

from markov_hoeffding.bounds import BoundPoint, BoundReport
from markov_hoeffding.chains import FiniteKernel
from markov_hoeffding.core import DiscreteMeasure, FunctionProfile, MetricSpace
from markov_hoeffding.montecarlo import (TailExperiment, clopper_pearson, empirical_tail, simulate_sums,
                                         tail_from_sums, validate_bounds, validate_finite_chain)

from oracles import exact_tail_by_paths


def test_constant_chain_has_no_tail():
    K = FiniteKernel(np.array([[1.0]]))
    f = FunctionProfile.from_table([0.7])
    est = empirical_tail(TailExperiment(K, f, 20, "stationary", 2000, 1), [0.01, 0.1])
    assert [p.p_hat for p in est.per_epsilon] == [0.0, 0.0]


def test_fair_coin_matches_binomial():
    K = FiniteKernel(np.full((2, 2), 0.5))
    f = FunctionProfile.from_table([0.0, 1.0])
    # oracle: exact binomial enumeration of |Bin(10, 1/2) - 5| > 10 eps
    dev = np.abs(np.arange(11) - 5)
    pmf = np.array([math.comb(10, j) for j in range(11)]) / 2**10
    grid = [0.25, 0.4, 0.5]
    exact = [pmf[dev > 10 * e].sum() for e in grid]
    assert exact[1] == pytest.approx(2**-9)
    assert exact[2] == 0.0
    est = empirical_tail(TailExperiment(K, f, 10, "stationary", 200000, 3), grid)
    for p, q in zip(est.per_epsilon, exact):
        assert p.ci_low <= q <= p.ci_high


def test_two_state_matches_path_enumeration(two_state):
    f = FunctionProfile.indicator(0, 2)
    start = DiscreteMeasure.dirac(0, two_state.space)
    grid = [0.05, 0.1, 0.15, 0.2, 0.3]
    exact = exact_tail_by_paths(two_state.P, [1.0, 0.0], [1.0, 0.0], 10, 10 * 2 / 3, grid)
    est = empirical_tail(TailExperiment(two_state, f, 10, start, 50000, 9), grid)
    for p, q in zip(est.per_epsilon, exact):
        assert p.ci_low <= q <= p.ci_high


def test_tail_estimate_invariants():
    rng = np.random.default_rng(0)
    est = tail_from_sums(rng.normal(size=5000), 0.0, 1, np.linspace(0.1, 3, 12))
    ph = [p.p_hat for p in est.per_epsilon]
    assert all(a >= b for a, b in zip(ph, ph[1:]))
    assert all(0 <= p.ci_low <= p.p_hat <= p.ci_high <= 1 for p in est.per_epsilon)


def test_clopper_pearson_edges():
    assert clopper_pearson(0, 100)[0] == 0.0
    assert clopper_pearson(100, 100)[1] == 1.0
    lo, hi = clopper_pearson(50, 100)
    assert lo < 0.5 < hi


def test_thread_count_does_not_change_sums(two_state):
    f = FunctionProfile.indicator(0, 2)
    start = DiscreteMeasure.dirac(0, two_state.space)
    base = TailExperiment(two_state, f, 30, start, 10000, 5)
    a = simulate_sums(base)
    b = simulate_sums(TailExperiment(two_state, f, 30, start, 10000, 5, workers=4), chunk=777)
    assert np.array_equal(a, b)


def test_center_requires_stationary_law():
    from markov_hoeffding.chains import LinearContraction
    exp = TailExperiment(LinearContraction(0.5), FunctionProfile.affine(1, 0, 0, 1), 5, "stationary", 10)
    with pytest.raises(ValueError):
        exp.resolved_center()


def _report(family, grid, value):
    return BoundReport(family, [BoundPoint(e, value, value, True, True) for e in grid], 0.0, [])


def test_validate_bounds_controls(two_state):
    f = FunctionProfile.indicator(0, 2)
    grid = [0.05, 0.1]
    est = empirical_tail(TailExperiment(two_state, f, 20, "stationary", 5000, 2), grid)
    rows = validate_bounds(est, [_report("Trivial", grid, 2.0)])
    assert all(r.verdict == "PASS" for r in rows)
    rows = validate_bounds(est, [_report("Broken", grid, 0.0)])
    assert any(r.verdict == "FAIL" for r in rows)
    with pytest.raises(ValueError):
        validate_bounds(est, [_report("Other", [0.05, 0.2], 2.0)])


def test_zero_tail_always_passes():
    est = tail_from_sums(np.zeros(1000), 0.0, 1, [0.5])
    assert validate_bounds(est, [_report("Tiny", [0.5], 1e-9)])[0].verdict == "PASS"


def test_validate_finite_chain_small(two_state):
    f = FunctionProfile.indicator(0, 2)
    start = DiscreteMeasure.dirac(0, two_state.space)
    rows, reports, ests, consts = validate_finite_chain(two_state, f, 100, [0.1, 0.2, 0.3], start, 4000, 1)
    assert consts.doeblin_verified and consts.lambda_spec == pytest.approx(0.7)
    assert set(reports) == {"TimeIndep", "GlynnDoeblin", "DoucTV", "FanL2", "Dobrushin"}
    assert all(r.verdict == "PASS" for r in rows)
