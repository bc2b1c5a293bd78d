import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import wasserstein_distance

from markov_hoeffding.core import BL, L2PI, TV, W1, DiscreteMeasure, GeneratorClass, MetricSpace
from markov_hoeffding.ipm import (NotDominated, ipm_distance, ipm_lp, l2pi_distance, mmd_distance,
                                  plugin_ipm, tv_distance, w1_distance_1d)


@st.composite
def measures(draw, max_atoms=6):
    k = draw(st.integers(1, max_atoms))
    pts = draw(st.lists(st.integers(-30, 30), min_size=k, max_size=k, unique=True))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    return DiscreteMeasure(np.array(pts) / 10.0, w / w.sum())


def test_tv_examples():
    a = DiscreteMeasure.dirac(0.0)
    assert tv_distance(a, a).value == 0.0
    assert tv_distance(a, DiscreteMeasure.dirac(1.0)).value == 1.0
    assert ipm_distance(a, DiscreteMeasure.dirac(1.0), TV).value == 2.0
    s = MetricSpace.line(2)
    mu = DiscreteMeasure.from_vector([0.9, 0.1], s)
    nu = DiscreteMeasure.from_vector([2 / 3, 1 / 3], s)
    # oracle: half the l1 gap by hand
    assert tv_distance(mu, nu).value == pytest.approx(0.5 * (abs(0.9 - 2 / 3) + abs(0.1 - 1 / 3)))
    assert tv_distance(mu, nu).convention == "classical"


def test_w1_examples():
    assert w1_distance_1d(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0)).value == pytest.approx(1.0)
    half = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
    assert w1_distance_1d(half, DiscreteMeasure.dirac(0.5)).value == pytest.approx(0.5)
    grid10 = DiscreteMeasure.uniform(np.arange(10) / 10)
    fine = DiscreteMeasure.uniform(np.arange(1000) / 1000)
    assert w1_distance_1d(grid10, fine).value <= 0.1


def test_lp_examples():
    a, b = DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(3.0)
    assert ipm_lp(a, b, BL).value == pytest.approx(2.0, abs=1e-9)
    assert ipm_lp(a, b, W1).value == pytest.approx(3.0, abs=1e-9)
    assert ipm_lp(a, a, W1).value == 0.0
    with pytest.raises(ValueError):
        ipm_lp(a, b, TV)


def test_lp_two_dimensional_matches_assignment():
    # two equal-weight atoms each: W1 is the cheaper of the two matchings
    s = MetricSpace(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]))
    mu = DiscreteMeasure([0, 1], [0.5, 0.5], s)
    nu = DiscreteMeasure([2, 3], [0.5, 0.5], s)
    D = s.dist_matrix()
    best = min(D[0, 2] + D[1, 3], D[0, 3] + D[1, 2]) / 2
    assert ipm_lp(mu, nu, W1).value == pytest.approx(best, abs=1e-9)


def test_mmd_examples():
    a, b = DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0)
    assert mmd_distance(a, a, 1.0).value == 0.0
    assert mmd_distance(a, b, 1.0).value == pytest.approx(math.sqrt(2 - 2 * math.exp(-0.5)))


def test_l2pi_examples():
    s = MetricSpace.line(3)
    pi = DiscreteMeasure.from_vector([0.5, 0.5, 0.0], s)
    mu = DiscreteMeasure.from_vector([1.0, 0.0, 0.0], s)
    nu = DiscreteMeasure.from_vector([0.0, 1.0, 0.0], s)
    assert l2pi_distance(mu, mu, pi).value == 0.0
    assert ipm_distance(mu, nu, L2PI, pi=pi).value == pytest.approx(2.0)
    with pytest.raises(NotDominated):
        l2pi_distance(DiscreteMeasure.from_vector([0.0, 0.0, 1.0], s), nu, pi)


def test_plugin_ipm_reports_heuristic_error():
    v = plugin_ipm(np.zeros(100), np.ones(100), W1)
    assert v.value == pytest.approx(1.0)
    assert v.est_error > 0


@given(measures(), measures(), measures())
@settings(max_examples=80, deadline=None)
def test_pseudometric_axioms(mu, nu, xi):
    for g in (TV, W1, BL, GeneratorClass("MMD", 0.7)):
        d = lambda a, b: ipm_distance(a, b, g).value
        assert d(mu, mu) <= 1e-9
        assert d(mu, nu) == pytest.approx(d(nu, mu), abs=1e-9)
        assert d(mu, nu) >= -1e-12
        assert d(mu, xi) <= d(mu, nu) + d(nu, xi) + 1e-9


@given(measures(), measures())
@settings(max_examples=80, deadline=None)
def test_generator_monotonicity(mu, nu):
    bl = ipm_distance(mu, nu, BL).value
    assert bl <= ipm_distance(mu, nu, W1).value + 1e-9
    assert bl <= ipm_distance(mu, nu, TV).value + 1e-9


@given(measures(), measures())
@settings(max_examples=80, deadline=None)
def test_lp_sweep_and_scipy_agree(mu, nu):
    sweep = w1_distance_1d(mu, nu).value
    lp = ipm_lp(mu, nu, W1).value
    ref = wasserstein_distance(mu.support, nu.support, mu.weights, nu.weights)
    assert abs(sweep - lp) <= 1e-9
    assert abs(sweep - ref) <= 1e-9
