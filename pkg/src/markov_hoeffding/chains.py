"""Reference Markov chains: sampling, exact k-step laws, stationary laws.

Every chain advances a batch of states with a deterministic map of uniforms,
``advance(states, u)``, so Monte Carlo code can draw the uniforms from per-trial
counter-based streams and stay reproducible under any schedule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import DiscreteMeasure, MetricSpace, RngStream, merge_atoms

MAX_ATOMS = 10**6


class ExactPathUnavailable(ValueError):
    """The exact k-step law is not tractable; use the sampling path."""


class ChainModel:
    kind = "abstract"
    noise_dim = 1
    state_dim = 0  # 0 means scalar states

    def advance(self, states: np.ndarray, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_state(self, state) -> None:
        pass

    def states_of(self, mu: DiscreteMeasure) -> np.ndarray:
        """Chain states corresponding to the atoms of mu."""
        return mu.support

    def k_step(self, start: DiscreteMeasure, k: int) -> DiscreteMeasure:
        raise ExactPathUnavailable(f"{self.kind} has no exact k-step law; use sampling")

    def sample_stationary(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_exact_stationary(self) -> bool:
        return False


def sample_from(chain: ChainModel, mu: DiscreteMeasure, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of states from mu, one per uniform."""
    cdf = np.cumsum(mu.weights)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return chain.states_of(mu)[idx]


@dataclass(frozen=True, eq=False)
class FiniteKernel(ChainModel):
    """Row-stochastic matrix on states 0..n-1 (placed at ``space`` coordinates)."""

    P: np.ndarray
    space: Optional[MetricSpace] = None
    kind = "FiniteKernel"

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("kernel must be square")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
            raise ValueError("kernel rows must be probability vectors")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)
        space = MetricSpace.line(P.shape[0]) if self.space is None else self.space
        if space.size != P.shape[0]:
            raise ValueError("space size must match the kernel")
        object.__setattr__(self, "space", space)
        cdf = np.cumsum(P, axis=1)
        cdf[:, -1] = 1.0
        object.__setattr__(self, "_cdf", cdf)

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    def check_state(self, state) -> None:
        s = np.asarray(state)
        if np.any(s < 0) or np.any(s >= self.n_states) or np.any(s != np.floor(s)):
            raise ValueError("state outside the finite state space")

    def advance(self, states, u):
        states = np.asarray(states, dtype=np.int64)
        rows = self._cdf[states]
        return np.sum(u[:, :1] >= rows, axis=1).clip(max=self.n_states - 1)

    def matrix_power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.P, k)

    def k_step(self, start, k):
        if start.space is None:
            raise ValueError("start must live on the kernel's state space")
        return DiscreteMeasure.from_vector(start.to_vector(self.n_states) @ self.matrix_power(k), self.space)

    def dirac(self, i: int) -> DiscreteMeasure:
        return DiscreteMeasure.dirac(i, self.space)

    def sample_stationary(self, u):
        return sample_from(self, stationary_distribution(self), u)

    @property
    def has_exact_stationary(self):
        return True

    def is_reversible(self, pi=None, tol=1e-12) -> bool:
        p = stationary_vector(self) if pi is None else pi
        flow = p[:, None] * self.P
        return bool(np.all(np.abs(flow - flow.T) <= tol))

    def slem(self) -> float:
        """Second-largest eigenvalue modulus (absolute spectral gap is 1 - slem)."""
        ev = np.linalg.eigvals(self.P)
        # drop one copy of the Perron eigenvalue 1
        rest = np.delete(np.abs(ev), int(np.argmin(np.abs(ev - 1.0))))
        return float(rest.max()) if rest.size else 0.0


@dataclass(frozen=True, eq=False)
class Ar1Discrete(ChainModel):
    """X' = X/10 + e with e uniform on {0, 0.1, ..., 0.9}; stationary law U[0,1).

    The declared stationary law is the left-endpoint grid of spacing
    10**-resolution_digits, whose W1 distance to U[0,1) is half a spacing.
    """

    resolution_digits: int = 6
    kind = "Ar1Discrete"

    @property
    def grid_w1_error(self) -> float:
        return 0.5 * 10.0 ** (-self.resolution_digits)

    def check_state(self, state):
        s = np.asarray(state, dtype=float)
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("Ar1Discrete states live in [0, 1]")

    def advance(self, states, u):
        digit = np.floor(10.0 * u[:, 0]).clip(0, 9)
        return np.asarray(states, dtype=float) / 10.0 + digit / 10.0

    def k_step(self, start, k):
        if not start.is_real:
            raise ValueError("Ar1Discrete measures are real-supported")
        if k < 0:
            raise ValueError("k must be nonnegative")
        if start.support.size * 10.0**k > MAX_ATOMS:
            raise ExactPathUnavailable("exact law would exceed 1e6 atoms; use the sampling path")
        m = 10**k
        j = np.arange(m, dtype=float)
        # X_k = (x + j) / 10^k, j uniform on {0, ..., 10^k - 1}
        vals = ((start.support[:, None] + j[None, :]) / float(m)).ravel()
        w = (start.weights[:, None] * np.full(m, 1.0 / m)[None, :]).ravel()
        return merge_atoms(vals, w)

    def stationary(self) -> DiscreteMeasure:
        m = 10**self.resolution_digits
        return DiscreteMeasure(np.arange(m) / float(m), np.full(m, 1.0 / m))

    def sample_stationary(self, u):
        return np.asarray(u, dtype=float)

    @property
    def has_exact_stationary(self):
        return True


@dataclass(frozen=True, eq=False)
class LinearContraction(ChainModel):
    """X' = a X + e with e drawn from a finite noise law (default: no noise)."""

    a: float
    noise: Optional[DiscreteMeasure] = None
    kind = "LinearContraction"

    def __post_init__(self):
        if not abs(self.a) < 1:
            raise ValueError("LinearContraction needs |a| < 1")
        if self.noise is None:
            object.__setattr__(self, "noise", DiscreteMeasure.dirac(0.0))
        elif not self.noise.is_real:
            raise ValueError("noise law must be real-supported")

    def advance(self, states, u):
        cdf = np.cumsum(self.noise.weights)
        idx = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), cdf.size - 1)
        return self.a * np.asarray(states, dtype=float) + self.noise.support[idx]

    def k_step(self, start, k):
        if start.support.size * float(self.noise.support.size) ** k > MAX_ATOMS:
            raise ExactPathUnavailable("exact law would exceed 1e6 atoms; use the sampling path")
        law = start
        for _ in range(k):
            vals = (self.a * law.support[:, None] + self.noise.support[None, :]).ravel()
            w = (law.weights[:, None] * self.noise.weights[None, :]).ravel()
            law = merge_atoms(vals, w)
        return law


@dataclass(frozen=True, eq=False)
class SgdIterate(ChainModel):
    """Projected constant-step mini-batch SGD on per-sample quadratic losses.

    Loss j is (1/2)(theta - c_j)^T H_j (theta - c_j); ``curvature`` holds either
    scalars h_j (H_j = h_j I) or full (d, d) matrices. Mini-batch indices are
    drawn uniformly with replacement; iterates are clipped to the box [lo, hi]^d.
    """

    centers: np.ndarray
    curvature: np.ndarray
    beta: float
    batch: int = 1
    lo: float = 0.0
    hi: float = 1.0
    kind = "SgdIterate"

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        h = np.array(self.curvature, dtype=float)
        if h.shape[0] != c.shape[0]:
            raise ValueError("one curvature per sample")
        for name, arr in (("centers", c), ("curvature", h)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.batch < 1 or not self.lo < self.hi:
            raise ValueError("batch >= 1 and a nonempty box are required")
        if not 0 < self.beta < 2.0 / self.L_smooth:
            raise ValueError(f"beta must lie in (0, 2/L) = (0, {2.0 / self.L_smooth:g})")

    @property
    def noise_dim(self):
        return self.batch

    @property
    def state_dim(self):
        return self.centers.shape[1]

    def _eigs(self):
        if self.curvature.ndim == 1:
            return self.curvature
        return np.concatenate([np.linalg.eigvalsh(H) for H in self.curvature])

    @property
    def eta_cvx(self) -> float:
        return float(self._eigs().min())

    @property
    def L_smooth(self) -> float:
        return float(self._eigs().max())

    @property
    def alpha(self) -> float:
        """Contraction rate max(|1 - beta eta|, |1 - beta L|)."""
        return max(abs(1 - self.beta * self.eta_cvx), abs(1 - self.beta * self.L_smooth))

    @property
    def diam(self) -> float:
        return (self.hi - self.lo) * np.sqrt(self.state_dim)

    def check_state(self, state):
        s = np.asarray(state, dtype=float)
        if s.shape[-1] != self.state_dim or np.any(s < self.lo) or np.any(s > self.hi):
            raise ValueError("state outside the parameter box")

    def states_of(self, mu):
        return mu.points()

    def advance(self, states, u):
        th = np.asarray(states, dtype=float).reshape(-1, self.state_dim)
        n = self.centers.shape[0]
        idx = np.minimum((u * n).astype(np.int64), n - 1)
        diff = th[:, None, :] - self.centers[idx]
        if self.curvature.ndim == 1:
            grad = np.mean(self.curvature[idx][..., None] * diff, axis=1)
        else:
            grad = np.mean(np.einsum("bkij,bkj->bki", self.curvature[idx], diff), axis=1)
        return np.clip(th - self.beta * grad, self.lo, self.hi)


def step(chain: ChainModel, state, rng: Union[RngStream, np.random.Generator]):
    """One transition from a single state."""
    chain.check_state(state)
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    u = gen.random((1, chain.noise_dim))
    batch = np.asarray(state)[None, ...]
    return chain.advance(batch, u)[0]


def k_step_distribution(chain: ChainModel, start: DiscreteMeasure, k: int) -> DiscreteMeasure:
    """Exact law of X_k from the start law."""
    return chain.k_step(start, k)


def stationary_vector(kernel: FiniteKernel, tol: float = 1e-12, max_sweeps: int = 10**6) -> np.ndarray:
    """Power iteration for pi P = pi from the uniform vector."""
    v = np.full(kernel.n_states, 1.0 / kernel.n_states)
    for _ in range(max_sweeps):
        nxt = v @ kernel.P
        nxt /= nxt.sum()
        if np.abs(nxt - v).sum() <= tol:
            return nxt
        v = nxt
    raise RuntimeError("power iteration did not converge")


def stationary_distribution(chain: ChainModel, samples: int = 10**4, burn_in: int = 10**3,
                            seed: int = 0, x0=None) -> DiscreteMeasure:
    """Stationary law: exact for finite kernels, declared grid for Ar1Discrete,
    empirical (parallel chains after burn-in) otherwise."""
    if isinstance(chain, FiniteKernel):
        return DiscreteMeasure.from_vector(stationary_vector(chain), chain.space)
    if isinstance(chain, Ar1Discrete):
        return chain.stationary()
    gen = RngStream(seed, 0xC4A1).generator()
    if x0 is None:
        x0 = np.zeros(chain.state_dim) if chain.state_dim else 0.0
        if isinstance(chain, SgdIterate):
            x0 = np.full(chain.state_dim, 0.5 * (chain.lo + chain.hi))
    x = np.repeat(np.asarray(x0, dtype=float)[None, ...], samples, axis=0)
    for _ in range(burn_in):
        x = chain.advance(x, gen.random((samples, chain.noise_dim)))
    if x.ndim == 1 or x.shape[1] == 1:
        return DiscreteMeasure.from_samples(x.ravel())
    return DiscreteMeasure(np.arange(samples), np.full(samples, 1.0 / samples), MetricSpace(x))


@dataclass(frozen=True)
class DoeblinCertificate:
    """P^m(x, .) >= lam * phi(.) for every state x."""

    m: int
    lam: float
    phi: DiscreteMeasure

    def verify(self, kernel: FiniteKernel, tol: float = 1e-14) -> bool:
        Pm = kernel.matrix_power(self.m)
        floor = self.lam * self.phi.to_vector(kernel.n_states)
        return bool(0 < self.lam <= 1 and np.all(Pm >= floor[None, :] - tol))


def doeblin_certificate(kernel: FiniteKernel, m: int = 1) -> DoeblinCertificate:
    """Largest minorization constant for P^m: lam = sum_y min_x P^m(x, y)."""
    colmin = kernel.matrix_power(m).min(axis=0)
    lam = float(colmin.sum())
    if lam <= 0:
        raise ValueError(f"no Doeblin minorization at m={m}")
    return DoeblinCertificate(m, lam, DiscreteMeasure.from_vector(colmin / lam, kernel.space))
