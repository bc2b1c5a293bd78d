"""Monte Carlo tail probabilities of partial sums and checks against bound reports.

Trial t draws all of its uniforms from RngStream(seed, t), so results do not
depend on chunking or on how many threads run the chunks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import beta as beta_dist

from .bounds import BoundReport, BoundSpec, evaluate_bound
from .chains import (ChainModel, FiniteKernel, doeblin_certificate, sample_from,
                     stationary_distribution)
from .core import TV, DiscreteMeasure, FunctionProfile, RngStream, minimal_stretch
from .ergodicity import concentrability
from .ipm import tv_distance

CI_LEVEL = 0.99
CHUNK = 4096


@dataclass
class TailExperiment:
    chain: ChainModel
    f: Union[FunctionProfile, Sequence[FunctionProfile]]
    n: int
    start: Union[DiscreteMeasure, str] = "stationary"
    trials: int = 10**5
    seed: int = 0
    center: Optional[float] = None
    workers: int = 1

    def observables(self) -> list:
        if isinstance(self.f, FunctionProfile):
            return [self.f] * self.n
        fs = list(self.f)
        if len(fs) != self.n:
            raise ValueError("need one observable per time step")
        return fs

    def resolved_center(self) -> float:
        """Sum of pi(f_i) under the declared stationary law."""
        if self.center is not None:
            return float(self.center)
        if not self.chain.has_exact_stationary:
            raise ValueError("center unavailable: chain has no declared stationary law")
        pi = stationary_distribution(self.chain)
        states = self.chain.states_of(pi)
        return float(sum(np.dot(pi.weights, fi(states)) for fi in self.observables()))


@dataclass
class TailPoint:
    eps: float
    p_hat: float
    ci_low: float
    ci_high: float
    count: int


@dataclass
class TailEstimate:
    per_epsilon: list
    trials: int
    method: str = "clopper-pearson-99"
    one_sided: bool = False

    @property
    def eps_grid(self):
        return [p.eps for p in self.per_epsilon]


def clopper_pearson(k: int, n: int, level: float = CI_LEVEL):
    a = 1 - level
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def _chunk_sums(exp: TailExperiment, fs, lo: int, hi: int) -> np.ndarray:
    chain, n, d = exp.chain, exp.n, exp.chain.noise_dim
    U = np.empty((hi - lo, 1 + (n - 1) * d))
    for r, t in enumerate(range(lo, hi)):
        U[r] = RngStream(exp.seed, t).generator().random(U.shape[1])
    if isinstance(exp.start, str):
        if exp.start != "stationary":
            raise ValueError("start must be a measure or 'stationary'")
        x = chain.sample_stationary(U[:, 0])
    else:
        x = sample_from(chain, exp.start, U[:, 0])
    s = np.asarray(fs[0](x), dtype=float).copy()
    for i in range(1, n):
        x = chain.advance(x, U[:, 1 + (i - 1) * d: 1 + i * d])
        s += fs[i](x)
    return s


def simulate_sums(exp: TailExperiment, chunk: int = CHUNK) -> np.ndarray:
    """Partial sums S_n = f_0(X_0) + ... + f_{n-1}(X_{n-1}), one per trial."""
    fs = exp.observables()
    edges = list(range(0, exp.trials, chunk)) + [exp.trials]
    jobs = list(zip(edges[:-1], edges[1:]))
    if exp.workers > 1:
        with ThreadPoolExecutor(max_workers=exp.workers) as pool:
            parts = list(pool.map(lambda j: _chunk_sums(exp, fs, *j), jobs))
    else:
        parts = [_chunk_sums(exp, fs, *j) for j in jobs]
    return np.concatenate(parts)


def tail_from_sums(sums, center: float, n: int, eps_grid, one_sided: bool = False) -> TailEstimate:
    dev = np.asarray(sums, dtype=float) - center
    if not one_sided:
        dev = np.abs(dev)
    pts = []
    for e in eps_grid:
        k = int(np.count_nonzero(dev > n * e))
        lo, hi = clopper_pearson(k, dev.size)
        pts.append(TailPoint(float(e), k / dev.size, lo, hi, k))
    return TailEstimate(pts, int(dev.size), one_sided=one_sided)


def empirical_tail(exp: TailExperiment, eps_grid, one_sided: bool = False) -> TailEstimate:
    """Estimate P(|S_n - center| > n eps) with 99% Clopper-Pearson intervals."""
    center = exp.resolved_center()
    return tail_from_sums(simulate_sums(exp), center, exp.n, eps_grid, one_sided)


@dataclass
class Verdict:
    family: str
    eps: float
    p_hat: float
    ci_low: float
    ci_high: float
    bound: float
    valid: bool
    verdict: str


def validate_bounds(estimate: TailEstimate, reports: Sequence[BoundReport]) -> list:
    """PASS where the lower CI end does not exceed the (conservative) bound."""
    rows = []
    grid = np.asarray(estimate.eps_grid, dtype=float)
    for rep in reports:
        if not np.array_equal(grid, np.asarray(rep.eps_grid, dtype=float)):
            raise ValueError(f"eps grid of {rep.family} differs from the estimate's grid")
        for tp, bp in zip(estimate.per_epsilon, rep.per_epsilon):
            ok = tp.ci_low <= bp.value
            rows.append(Verdict(rep.family, tp.eps, tp.p_hat, tp.ci_low, tp.ci_high,
                                bp.value, bp.valid_proof, "PASS" if ok else "FAIL"))
    return rows


@dataclass
class ChainConstants:
    """Constants a finite chain feeds into the bound families."""

    gamma_tv: float
    gamma_tilde: float
    delta_seq: list
    doeblin_lam: float
    doeblin_verified: bool
    lambda_spec: Optional[float]
    tv_mu_pi: float
    sup_norm: float
    span: float
    notes: list = field(default_factory=list)


def finite_chain_constants(kernel: FiniteKernel, f: FunctionProfile, start: DiscreteMeasure,
                           horizon: int = 50) -> ChainConstants:
    states = list(range(kernel.n_states))
    rep = concentrability(kernel, TV, states, horizon=horizon)
    cert = doeblin_certificate(kernel, 1)
    pi = stationary_distribution(kernel)
    lam_spec = kernel.slem() if kernel.is_reversible() else None
    notes = list(rep.notes)
    if lam_spec is None:
        notes.append("kernel not reversible: FanL2 skipped")
    return ChainConstants(rep.gamma, rep.gamma_tilde, rep.delta_seq, cert.lam, cert.verify(kernel),
                          lam_spec, tv_distance(start, pi).value, minimal_stretch(f, TV), f.span, notes)


def finite_chain_reports(c: ChainConstants, n: int, eps_grid, families=None) -> dict:
    """BoundReports for a finite chain and a time-independent observable."""
    families = families or ["TimeIndep", "GlynnDoeblin", "DoucTV", "FanL2", "Dobrushin"]
    delta = list(c.delta_seq) + [c.delta_seq[-1]] * max(0, n - len(c.delta_seq))
    params = {
        "TimeIndep": dict(M=c.sup_norm, gamma=c.gamma_tv, span=c.span, generator="TV"),
        "TimeDep": dict(M_list=[c.sup_norm] * n, gamma=c.gamma_tv, span_list=[c.span] * n, generator="TV"),
        "GlynnDoeblin": dict(m=1, lam=c.doeblin_lam, sup_norm=c.sup_norm),
        "DoucTV": dict(gamma_tilde=c.gamma_tilde, span=c.span, tv_mu_pi=c.tv_mu_pi),
        "FanL2": dict(lambda_spec=c.lambda_spec, spans=[c.span] * n),
        "Dobrushin": dict(M_list=[c.sup_norm] * n, delta_seq=delta, span_list=[c.span] * n,
                          ipm_mu_pi=2 * c.tv_mu_pi, generator="TV"),
    }
    out = {}
    for fam in families:
        if fam == "FanL2" and c.lambda_spec is None:
            continue
        if fam == "GlynnDoeblin" and not c.doeblin_verified:
            continue
        out[fam] = evaluate_bound(BoundSpec(fam, n, list(eps_grid), params[fam]))
    return out


def validate_finite_chain(kernel: FiniteKernel, f: FunctionProfile, n: int, eps_grid,
                          start: DiscreteMeasure, trials: int, seed: int, workers: int = 1,
                          families=None):
    """Simulate, bound and compare. FanL2 gets its own stationary one-sided run."""
    consts = finite_chain_constants(kernel, f, start)
    reports = finite_chain_reports(consts, n, eps_grid, families)
    main = [r for k, r in reports.items() if k != "FanL2"]
    exp = TailExperiment(kernel, f, n, start, trials, seed, workers=workers)
    est = empirical_tail(exp, eps_grid)
    rows = validate_bounds(est, main)
    ests = {"two_sided": est}
    if "FanL2" in reports:
        sexp = TailExperiment(kernel, f, n, "stationary", trials, seed + 1, workers=workers)
        sest = empirical_tail(sexp, eps_grid, one_sided=True)
        rows += validate_bounds(sest, [reports["FanL2"]])
        ests["stationary_one_sided"] = sest
    return rows, reports, ests, consts
