"""UCB-M on rested Markovian arms.

Each arm owns a uniform stream keyed by (seed, arm index); its k-th pull uses
the k-th uniform, so an arm's state depends only on its own pull count.
The first pull observes the arm's initial state, every later pull advances the
arm one step and observes the new state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..bounds import BETA
from ..chains import FiniteKernel, sample_from, stationary_distribution
from ..core import W1, FunctionProfile, GeneratorClass, RngStream, minimal_stretch
from ..ergodicity import concentrability

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


def auto_exploration(R, gamma, spans, K: int) -> float:
    """max_i (R_i Gamma_i + sp_i)^2 (1/sqrt(log K) + 2 sqrt 2)^2."""
    worst = max((r * g + s) ** 2 for r, g, s in zip(R, gamma, spans))
    return worst * (1 / math.sqrt(math.log(K)) + 2 * math.sqrt(2)) ** 2


@dataclass
class BanditConfig:
    arms: Sequence[FiniteKernel]
    rewards: Sequence[FunctionProfile]
    M_play: int = 1
    horizon: int = 10**4
    L_explore: Optional[float] = None
    generator: GeneratorClass = W1
    R: Optional[list] = None
    gamma: Optional[list] = None
    start: Union[str, Sequence[int]] = "stationary"
    checkpoints: tuple = (100, 1000, 10000)
    eta: list = field(default_factory=list, init=False)
    pis: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        K = len(self.arms)
        if len(self.rewards) != K:
            raise ValueError("one reward per arm")
        if K < self.M_play + 1:
            raise ValueError("need K >= M_play + 1")
        self.pis = [stationary_distribution(a) for a in self.arms]
        self.eta = [pi.expect(r) for pi, r in zip(self.pis, self.rewards)]
        if self.R is None:
            self.R = [minimal_stretch(r, self.generator, pi) for r, pi in zip(self.rewards, self.pis)]
        if self.gamma is None:
            self.gamma = [concentrability(a, self.generator, range(a.n_states), pi=pi).gamma
                          for a, pi in zip(self.arms, self.pis)]
        if self.L_explore is None:
            self.L_explore = auto_exploration(self.R, self.gamma, self.spans, K)
        self.checkpoints = tuple(t for t in self.checkpoints if t <= self.horizon)

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def spans(self) -> list:
        return [r.span for r in self.rewards]

    def order(self) -> np.ndarray:
        """Arm indices by decreasing eta (stable)."""
        return np.argsort(-np.asarray(self.eta), kind="stable")


@dataclass
class RegretTrace:
    seed: int
    arm_sets: np.ndarray  # (horizon, M) arms played at each step
    regret: np.ndarray  # cumulative regret from conditional expected rewards
    regret_realized: np.ndarray
    pulls: dict  # checkpoint -> T_i(t)


def ucb_m_batch(c: BanditConfig, seeds: Sequence[int]) -> list:
    """Run UCB-M once per seed, vectorised across seeds."""
    S, K, M, n = len(seeds), c.K, c.M_play, c.horizon
    U = np.empty((S, K, n + 1))
    for s, seed in enumerate(seeds):
        for i in range(K):
            U[s, i] = RngStream(seed, i).generator().random(n + 1)
    state = np.zeros((S, K), dtype=np.int64)
    for i, arm in enumerate(c.arms):
        if isinstance(c.start, str):
            state[:, i] = sample_from(arm, c.pis[i], U[:, i, 0])
        else:
            state[:, i] = c.start[i]
    # conditional mean of the next observation given the current state
    Pr = [arm.P @ r(np.arange(arm.n_states)) for arm, r in zip(c.arms, c.rewards)]
    rv = [np.asarray(r(np.arange(arm.n_states)), dtype=float) for arm, r in zip(c.arms, c.rewards)]
    T = np.zeros((S, K), dtype=np.int64)
    total = np.zeros((S, K))
    best = float(np.sum(np.sort(c.eta)[::-1][:M]))
    sets = np.empty((S, n, M), dtype=np.int64)
    got_exp = np.zeros(S)
    got_real = np.zeros(S)
    reg = np.empty((S, n))
    reg_real = np.empty((S, n))
    pulls = {}
    rows = np.arange(S)
    for t in range(n):
        if t < K:
            chosen = np.tile((t + np.arange(M)) % K, (S, 1))
        else:
            h = total / T + np.sqrt(c.L_explore * math.log(t) / T)
            chosen = np.argsort(-h, axis=1, kind="stable")[:, :M]  # ties: lowest index
        sets[:, t] = chosen
        for j in range(M):
            arm_idx = chosen[:, j]
            for i in range(K):
                sel = rows[arm_idx == i]
                if sel.size == 0:
                    continue
                first = T[sel, i] == 0
                x = state[sel, i]
                exp_r = np.where(first, c.eta[i] if isinstance(c.start, str) else rv[i][x], Pr[i][x])
                u = U[sel, i, T[sel, i]][:, None]
                nxt = np.where(first, x, c.arms[i].advance(x, u))
                state[sel, i] = nxt
                obs = rv[i][nxt]
                total[sel, i] += obs
                T[sel, i] += 1
                got_exp[sel] += exp_r
                got_real[sel] += obs
        reg[:, t] = (t + 1) * best - got_exp
        reg_real[:, t] = (t + 1) * best - got_real
        if t + 1 in c.checkpoints:
            pulls[t + 1] = T.copy()
    return [RegretTrace(int(seed), sets[s], reg[s], reg_real[s], {k: v[s] for k, v in pulls.items()})
            for s, seed in enumerate(seeds)]


def ucb_m_run(c: BanditConfig, seed: int) -> RegretTrace:
    return ucb_m_batch(c, [seed])[0]


def regret_rhs(c: BanditConfig, n: int) -> float:
    """4 L log n sum (eta_1 - eta_i)/(eta_M - eta_i)^2 + sum (eta_1 - eta_i)(1 + 2 beta) M
    + 2 sum R_i Gamma_i, over suboptimal arms i > M."""
    eta = np.sort(np.asarray(c.eta))[::-1]
    M = c.M_play
    sub = eta[M:]
    gap_m = eta[M - 1] - sub
    if np.any(gap_m <= 0):
        raise ZeroDivisionError("division by zero gap: eta_M equals a suboptimal eta")
    lead = eta[0] - sub
    return float(4 * c.L_explore * math.log(n) * np.sum(lead / gap_m**2)
                 + np.sum(lead) * (1 + 2 * BETA) * M
                 + 2 * np.sum(np.asarray(c.R) * np.asarray(c.gamma)))


def pulls_bound(c: BanditConfig, n: int) -> dict:
    """E[T_i(n)] <= (1 + 2 beta) M + 4 L log n / (eta_M - eta_i)^2 per suboptimal arm."""
    order = c.order()
    M = c.M_play
    eta_m = c.eta[order[M - 1]]
    return {int(i): (1 + 2 * BETA) * M + 4 * c.L_explore * math.log(n) / (eta_m - c.eta[i]) ** 2
            for i in order[M:]}


@dataclass
class BanditVerdict:
    rows: list  # (n, mean regret, ci_high, rhs, PASS/FAIL)
    pull_rows: list  # (arm, n, mean T_i, ci_high, bound, PASS/FAIL)
    L_explore: float
    lemma_constant: float
    theorem_constant: float
    ratio: Optional[float]
    passed: bool


def regret_bound_check(c: BanditConfig, traces: Sequence[RegretTrace]) -> BanditVerdict:
    """Mean regret + 99% CI against the theorem's right-hand side at each checkpoint."""
    rows, prow = [], []
    S = len(traces)
    for n in c.checkpoints:
        r = np.array([tr.regret[n - 1] for tr in traces])
        hi = r.mean() + Z99 * r.std(ddof=1) / math.sqrt(S) if S > 1 else r.mean()
        rhs = regret_rhs(c, n)
        rows.append((n, float(r.mean()), float(hi), rhs, "PASS" if hi <= rhs else "FAIL"))
        for arm, b in pulls_bound(c, n).items():
            t = np.array([tr.pulls[n][arm] for tr in traces], dtype=float)
            thi = t.mean() + Z99 * t.std(ddof=1) / math.sqrt(S) if S > 1 else t.mean()
            prow.append((arm, n, float(t.mean()), float(thi), b, "PASS" if t.mean() <= b else "FAIL"))
    means = {n: m for n, m, *_ in rows}
    ratio = None
    if 1000 in means and 10000 in means and means[1000] > 0:
        ratio = means[10000] / means[1000]
    lemma = max((r * g + s) ** 2 for r, g, s in zip(c.R, c.gamma, c.spans))
    theorem = 2 * float(np.sum(np.asarray(c.R) * np.asarray(c.gamma)))
    ok = all(r[-1] == "PASS" for r in rows)
    return BanditVerdict(rows, prow, c.L_explore, lemma, theorem, ratio, ok)


def two_state_arm(eta: float, p1: float, lam: float, slope: float):
    """Two-state arm at coordinates {0, 1} with pi(1) = p1, second eigenvalue lam,
    and reward eta + slope (x - p1), whose stationary mean is exactly eta."""
    a = (1 - lam) * p1  # 0 -> 1
    b = (1 - lam) * (1 - p1)  # 1 -> 0
    P = np.array([[1 - a, a], [b, 1 - b]])
    r = FunctionProfile.from_table([eta - slope * p1, eta + slope * (1 - p1)], name=f"r(eta={eta:g})")
    return FiniteKernel(P), r
