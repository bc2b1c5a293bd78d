"""Concentrability constants and IPM Dobrushin coefficients."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chains import (ChainModel, DoeblinCertificate, ExactPathUnavailable, FiniteKernel,
                     stationary_distribution, stationary_vector)
from .core import DiscreteMeasure, GeneratorClass, RngStream
from .ipm import ipm_distance


@dataclass
class ErgodicityReport:
    generator: GeneratorClass
    gamma: float
    gamma_tilde: Optional[float]
    per_step: list  # (i, sup over the grid of IPM(P^i(x, .), pi))
    delta_seq: list
    truncation_horizon: int
    tail_bound: float
    x_grid: list
    partial_sum: float = 0.0
    rate: float = 0.0
    divergent: bool = False
    method: str = "exact"
    notes: list = field(default_factory=list)


def geometric_tail(values: Sequence[float], window: int = 3, rel_floor: float = 1e-11):
    """Fit v_i ~ c r^i on the last ``window`` values; return (r, tail, divergent).

    tail = v_last r / (1 - r) estimates the sum of the terms past the window.
    Values below rel_floor times the largest one are round-off and count as
    converged (tail 0).
    """
    allv = np.asarray(values, dtype=float)
    v = allv[-window:]
    if v.size == 0 or np.any(v <= rel_floor * max(allv.max(), 1e-300)):
        return 0.0, 0.0, False
    if v.size == 1:
        return 1.0, 0.0, True
    slope = np.polyfit(np.arange(v.size), np.log(v), 1)[0]
    r = float(np.exp(slope))
    if r >= 1.0:
        return r, 0.0, True
    return r, float(v[-1] * r / (1.0 - r)), False


def _dirac(chain: ChainModel, x) -> DiscreteMeasure:
    if isinstance(chain, FiniteKernel):
        return chain.dirac(int(x))
    return DiscreteMeasure.dirac(float(x))


def _finite_steps(chain: FiniteKernel, g, x_grid, horizon, pi):
    """Rows of P^i for i = 1..horizon, with IPMs to pi."""
    out = np.zeros((len(x_grid), horizon))
    Pi = np.eye(chain.n_states)
    pv = pi.to_vector(chain.n_states)
    for i in range(horizon):
        Pi = Pi @ chain.P
        for a, x in enumerate(x_grid):
            if g.tag == "TV":
                out[a, i] = float(np.abs(Pi[int(x)] - pv).sum())
            else:
                row = DiscreteMeasure.from_vector(Pi[int(x)] / Pi[int(x)].sum(), chain.space)
                out[a, i] = ipm_distance(row, pi, g, pi=pi).value
    return out


def _sampled_law(chain: ChainModel, x, k: int, samples: int, seed: int) -> np.ndarray:
    gen = RngStream(seed, 0x5A3).child(k).generator()
    s = np.repeat(np.asarray(x, dtype=float)[None, ...], samples, axis=0)
    for _ in range(k):
        s = chain.advance(s, gen.random((samples, chain.noise_dim)))
    return s


def concentrability(chain: ChainModel, g: GeneratorClass, x_grid, horizon: int = 50,
                    pi: Optional[DiscreteMeasure] = None, tail_window: int = 3,
                    samples: int = 10**4, seed: int = 0) -> ErgodicityReport:
    """Gamma_F = sup_x sum_{i>=1} IPM(P^i(x, .), pi), sup taken over ``x_grid``.

    The exact k-step path is used while the chain provides it; the horizon is
    cut where it runs out. Chains without any exact law fall back to empirical
    measures of ``samples`` paths. The remainder past the horizon is a
    geometric extrapolation from the last ``tail_window`` per-step maxima.
    """
    x_grid = list(x_grid)
    if not x_grid:
        raise ValueError("x_grid must be nonempty")
    notes = ["sup over x approximated on the supplied grid"]
    method = "exact"
    if pi is None:
        pi = stationary_distribution(chain, samples=samples, seed=seed)
    if isinstance(chain, FiniteKernel):
        table = _finite_steps(chain, g, x_grid, horizon, pi)
    else:
        cols = []
        try:
            chain.k_step(_dirac(chain, x_grid[0]), 1)
        except ExactPathUnavailable:
            method = "sampled"
        for i in range(1, horizon + 1):
            col = []
            try:
                for x in x_grid:
                    if method == "exact":
                        law = chain.k_step(_dirac(chain, x), i)
                    else:
                        law = DiscreteMeasure.from_samples(_sampled_law(chain, x, i, samples, seed))
                    col.append(ipm_distance(law, pi, g, pi=pi).value)
            except ExactPathUnavailable:
                notes.append(f"exact k-step path exhausted after step {i - 1}")
                break
            cols.append(col)
        if not cols:
            raise ExactPathUnavailable("no step could be evaluated")
        table = np.array(cols).T
        if method == "sampled":
            notes.append(f"per-step values are plug-in estimates from {samples} paths")
    n_used = table.shape[1]
    sup_step = table.max(axis=0)
    partial = float(table.sum(axis=1).max())
    r, tail, divergent = geometric_tail(sup_step, tail_window)
    if divergent:
        notes.append("no geometric tail detected: gamma is a lower bound only")

    delta_seq, gamma_tilde = [], None
    if isinstance(chain, FiniteKernel) and g.tag in ("TV", "L2Pi"):
        pv = pi.to_vector(chain.n_states)
        fn = dobrushin_tv if g.tag == "TV" else (lambda P, i: dobrushin_l2(P, i, pv))
        delta_seq = [fn(chain, i) for i in range(horizon)]
        _, dtail, ddiv = geometric_tail(delta_seq, tail_window)
        gamma_tilde = float(np.sum(delta_seq) + dtail)
        if ddiv:
            notes.append("Dobrushin sequence shows no geometric decay")

    return ErgodicityReport(g, partial + tail, gamma_tilde,
                            [(i + 1, float(v)) for i, v in enumerate(sup_step)],
                            delta_seq, n_used, tail, x_grid, partial, r, divergent, method, notes)


def dobrushin_tv(kernel: FiniteKernel, i: int = 1) -> float:
    """Classical coefficient of P^i: max over row pairs of their [0, 1] TV distance.

    Both sides of the IPM ratio scale together, so the generator-faithful
    coefficient (sup-norm ball) takes the same value.
    """
    Pi = kernel.matrix_power(i)
    if Pi.shape[0] < 2:
        return 0.0
    gaps = 0.5 * np.abs(Pi[:, None, :] - Pi[None, :, :]).sum(axis=-1)
    return float(min(1.0, gaps.max()))


def dobrushin_l2(kernel: FiniteKernel, i: int, pi_vec=None) -> float:
    """Operator norm of mu -> mu P^i on measures with mean-zero densities in L2(pi)."""
    p = stationary_vector(kernel) if pi_vec is None else np.asarray(pi_vec, dtype=float)
    s = np.sqrt(p)
    Pi = kernel.matrix_power(i)
    # density map g -> g' in weighted coordinates v = sqrt(pi) g
    B = (s[:, None] * Pi / s[None, :]).T
    proj = np.eye(p.size) - np.outer(s, s)
    return float(np.linalg.norm(B @ proj, 2))


def dobrushin_ipm_estimate(chain: ChainModel, g: GeneratorClass, pair_grid, i: int = 1,
                           pi: Optional[DiscreteMeasure] = None, samples: int = 10**4,
                           seed: int = 0) -> float:
    """Grid lower estimate of Delta_F(P^i) from Dirac pairs.

    A pair at distance D > 1 is brought inside the unit ball by mixing both
    Diracs with a common point (weight 1/D), which scales both IPMs by 1/D and
    leaves their ratio unchanged. Each admissible pair therefore contributes
    IPM(delta_x P^i, delta_x' P^i) / IPM(delta_x, delta_x').
    """
    best, admissible = 0.0, 0
    for x, y in pair_grid:
        mx, my = _dirac(chain, x), _dirac(chain, y)
        den = ipm_distance(mx, my, g, pi=pi).value
        if den <= 0:
            continue
        admissible += 1
        try:
            lx, ly = chain.k_step(mx, i), chain.k_step(my, i)
        except ExactPathUnavailable:
            lx = DiscreteMeasure.from_samples(_sampled_law(chain, x, i, samples, seed))
            ly = DiscreteMeasure.from_samples(_sampled_law(chain, y, i, samples, seed + 1))
        num = ipm_distance(lx, ly, g, pi=pi).value
        best = max(best, num / den)
    if admissible == 0:
        raise ValueError("no admissible pair (all pairs at IPM distance 0)")
    return best


def doeblin_gamma_tv(cert: DoeblinCertificate) -> float:
    """Gamma_TV <= sum_n 2 (1 - lam)^n = 2 / lam under a one-step minorization."""
    if cert.m != 1:
        raise ValueError("the 2/lam bound needs m = 1")
    return 2.0 / cert.lam
