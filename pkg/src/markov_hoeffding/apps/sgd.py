"""Polyak-Ruppert averaging of constant-step projected SGD viewed as a Markov chain."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..chains import SgdIterate
from ..core import RngStream


def sample_complexity(d_p: int, eps: float, delta: float, diam: float, gamma_bl: float) -> float:
    """m >= d_p^2 / (4 eps^2) log(2 d_p / delta) diam^2 (2 Gamma_BL + 1)^2."""
    return d_p**2 / (4 * eps**2) * math.log(2 * d_p / delta) * diam**2 * (2 * gamma_bl + 1) ** 2


def gamma_w_bound(alpha: float, diam: float) -> float:
    """sum_{i>=1} alpha^i diam: W1 contraction from any start inside a set of diameter diam."""
    if not 0 <= alpha < 1:
        raise ValueError("need a contraction rate in [0, 1)")
    return diam * alpha / (1 - alpha)


@dataclass
class SgdConfig:
    centers: np.ndarray
    curvature: np.ndarray
    beta: float
    batch: int = 1
    lo: float = 0.0
    hi: float = 1.0
    eps: float = 0.1
    delta: float = 0.1
    gamma_bl: Optional[float] = None
    m: Optional[int] = None
    theta0: Optional[np.ndarray] = None
    stationary_chains: int = 20000
    stationary_burn_in: int = 300
    contraction_pairs: Optional[list] = None
    contraction_steps: int = 10
    contraction_reps: int = 2000

    def chain(self) -> SgdIterate:
        return SgdIterate(self.centers, self.curvature, self.beta, self.batch, self.lo, self.hi)


@dataclass
class SgdReport:
    m: int
    alpha: float
    gamma_bl: float
    mean_pi: np.ndarray
    frequency: float
    contraction: list  # (pair, step, ratio)
    max_contraction: float
    passed: bool
    errors: np.ndarray
    notes: list = field(default_factory=list)


def stationary_mean(chain: SgdIterate, chains: int, burn_in: int, seed: int) -> np.ndarray:
    """E_pi theta from parallel chains run well past mixing (independent stream)."""
    gen = RngStream(seed, 2**63 + 17).generator()
    x = np.full((chains, chain.state_dim), 0.5 * (chain.lo + chain.hi))
    acc = np.zeros(chain.state_dim)
    keep = burn_in // 2
    for k in range(burn_in):
        x = chain.advance(x, gen.random((chains, chain.noise_dim)))
        if k >= burn_in - keep:
            acc += x.mean(axis=0)
    return acc / keep


def averaged_iterates(chain: SgdIterate, m: int, theta0, trials: int, seed: int,
                      chunk: int = 128) -> np.ndarray:
    """theta-bar_m = (1/m) sum_{k=1}^m theta_k, one row per trial."""
    d, b = chain.state_dim, chain.noise_dim
    out = np.empty((trials, d))
    for a in range(0, trials, chunk):
        idx = range(a, min(trials, a + chunk))
        U = np.stack([RngStream(seed, t).generator().random((m, b)) for t in idx])
        x = np.repeat(np.asarray(theta0, dtype=float).reshape(1, d), len(idx), axis=0)
        acc = np.zeros_like(x)
        for k in range(m):
            x = chain.advance(x, U[:, k])
            acc += x
        out[a:a + len(idx)] = acc / m
    return out


def coupled_contraction(chain: SgdIterate, pairs, steps: int, reps: int, seed: int) -> list:
    """Per-step ratios E|X_k - Y_k| / E|X_{k-1} - Y_{k-1}| under common mini-batches.

    The synchronous coupling upper-bounds W1 between the two pushed laws.
    """
    rows = []
    d = chain.state_dim
    for p_idx, (x0, y0) in enumerate(pairs):
        gen = RngStream(seed, 2**62 + p_idx).generator()
        x = np.repeat(np.asarray(x0, dtype=float).reshape(1, d), reps, axis=0)
        y = np.repeat(np.asarray(y0, dtype=float).reshape(1, d), reps, axis=0)
        prev = float(np.mean(np.linalg.norm(x - y, axis=1)))
        for k in range(1, steps + 1):
            u = gen.random((reps, chain.noise_dim))
            x, y = chain.advance(x, u), chain.advance(y, u)
            cur = float(np.mean(np.linalg.norm(x - y, axis=1)))
            if prev > 0:
                rows.append(((tuple(np.ravel(x0)), tuple(np.ravel(y0))), k, cur / prev))
            prev = cur
    return rows


def sgd_chain_experiment(c: SgdConfig, trials: int, seed: int, ci_slack: float = 0.02,
                         tol: float = 0.01) -> SgdReport:
    chain = c.chain()
    alpha = chain.alpha
    notes = []
    gamma = c.gamma_bl
    if gamma is None:
        gamma = gamma_w_bound(alpha, chain.diam)
        notes.append("Gamma_BL bounded by Gamma_W <= diam * alpha / (1 - alpha)")
    m = c.m if c.m is not None else int(math.ceil(
        sample_complexity(chain.state_dim, c.eps, c.delta, chain.diam, gamma)))
    theta0 = c.theta0 if c.theta0 is not None else np.full(chain.state_dim, c.lo)
    mean_pi = stationary_mean(chain, c.stationary_chains, c.stationary_burn_in, seed)
    bars = averaged_iterates(chain, m, theta0, trials, seed)
    err = np.linalg.norm(bars - mean_pi[None, :], axis=1)
    freq = float(np.mean(err < c.eps))
    pairs = c.contraction_pairs
    if pairs is None:
        lo, hi = c.lo, c.hi
        d = chain.state_dim
        pairs = [(np.full(d, lo), np.full(d, hi)), (np.full(d, lo), np.full(d, (lo + hi) / 2)),
                 (np.full(d, lo + 0.2 * (hi - lo)), np.full(d, lo + 0.9 * (hi - lo)))]
    rows = coupled_contraction(chain, pairs, c.contraction_steps, c.contraction_reps, seed)
    worst = max(r[2] for r in rows) if rows else 0.0
    passed = freq >= 1 - c.delta - ci_slack and worst <= alpha + tol
    return SgdReport(m, alpha, gamma, mean_pi, freq, rows, worst, passed, err, notes)
