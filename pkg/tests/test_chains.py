import numpy as np
import pytest

from markov_hoeffding.chains import (Ar1Discrete, ExactPathUnavailable, FiniteKernel, LinearContraction,
                                     SgdIterate, doeblin_certificate, k_step_distribution,
                                     stationary_distribution, stationary_vector, step)
from markov_hoeffding.core import DiscreteMeasure, RngStream


def test_single_steps():
    ar = Ar1Discrete()
    assert ar.advance(np.array([0.0]), np.array([[0.35]]))[0] == pytest.approx(0.3)
    ident = FiniteKernel(np.eye(2))
    assert step(ident, 0, RngStream(0, 0)) == 0
    lc = LinearContraction(0.5)
    assert step(lc, 0.8, RngStream(0, 0)) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        step(ident, 5, RngStream(0, 0))


def test_k_step_examples(two_state):
    law = k_step_distribution(Ar1Discrete(), DiscreteMeasure.dirac(0.0), 1)
    assert law.support.tolist() == pytest.approx([j / 10 for j in range(10)])
    assert law.weights.tolist() == pytest.approx([0.1] * 10)
    assert two_state.k_step(two_state.dirac(0), 1).to_vector(2).tolist() == pytest.approx([0.9, 0.1])
    # oracle: hand multiplication of the first row by P
    assert two_state.k_step(two_state.dirac(0), 2).to_vector(2).tolist() == pytest.approx([0.83, 0.17])


def test_ar1_exact_path_limit():
    with pytest.raises(ExactPathUnavailable):
        Ar1Discrete().k_step(DiscreteMeasure.dirac(0.0), 7)


def test_stationary_laws(two_state):
    assert stationary_vector(two_state).tolist() == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    ds = FiniteKernel(np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]]))
    assert stationary_vector(ds).tolist() == pytest.approx([1 / 3] * 3, abs=1e-12)
    pi = stationary_distribution(Ar1Discrete(2))
    assert pi.weights.tolist() == pytest.approx([0.01] * 100)


def test_stationary_vector_nonconvergent():
    with pytest.raises(RuntimeError):
        stationary_vector(FiniteKernel(np.array([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])), max_sweeps=1000)


def test_slem_and_reversibility(two_state):
    assert two_state.is_reversible()
    assert two_state.slem() == pytest.approx(0.7)


def test_doeblin_certificate(two_state):
    cert = doeblin_certificate(two_state)
    assert cert.lam == pytest.approx(0.3)
    assert cert.verify(two_state)


def test_sgd_chain_collapses_at_inverse_smoothness():
    # single loss (h=2, c=0.3), beta = 1/L: one step lands on the minimiser
    ch = SgdIterate(np.array([0.3]), np.array([2.0]), 0.5)
    assert ch.alpha == pytest.approx(0.0)
    x = ch.advance(np.array([[0.9]]), np.array([[0.1]]))
    assert x[0, 0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        SgdIterate(np.array([0.3]), np.array([2.0]), 1.5)
