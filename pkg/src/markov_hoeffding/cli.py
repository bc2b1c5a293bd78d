"""Command-line entry point: JSON configs in, CSV tables and a manifest out.

Exit codes: 0 all PASS, 1 any FAIL, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, ClassVar, Optional

import numpy as np
import scipy

from . import __version__
from .apps.bandit import BanditConfig, regret_bound_check, regret_rhs, two_state_arm, ucb_m_batch
from .apps.erm import ErmProblem, erm_experiment, quadratic_loss
from .apps.sgd import SgdConfig, sgd_chain_experiment
from .bounds import BoundSpec, evaluate_bound
from .chains import Ar1Discrete, FiniteKernel, LinearContraction, sample_from
from .core import DiscreteMeasure, FunctionProfile, GeneratorClass, MetricSpace, RngStream
from .ergodicity import concentrability
from .ipm import ipm_distance, ipm_lp, w1_distance_1d
from .montecarlo import validate_finite_chain

SCHEMA_VERSION = "1"
OUT_ENV = "MARKOV_HOEFFDING_OUT"
EXPERIMENTS = ("simulate", "ipm", "gamma", "bound", "validate", "erm", "sgd", "bandit")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """12 significant digits for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


# ---------------------------------------------------------------- config types

def _load(cls, data, path: str):
    """Build a config dataclass from a dict, rejecting unknown and missing keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {f.name: f for f in fields(cls)}
    extra = sorted(set(data) - set(known))
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {extra}")
    nested = getattr(cls, "nested", {})
    kw = {}
    for name, f in known.items():
        if name not in data:
            if f.default is MISSING and f.default_factory is MISSING:
                raise ConfigError(f"{path}: missing required key {name!r}")
            continue
        v = data[name]
        if name in nested and v is not None:
            sub = nested[name]
            if isinstance(sub, list):
                if not isinstance(v, list):
                    raise ConfigError(f"{path}.{name}: expected a list")
                v = [_load(sub[0], item, f"{path}.{name}[{i}]") for i, item in enumerate(v)]
            else:
                v = _load(sub, v, f"{path}.{name}")
        kw[name] = v
    return cls(**kw)


@dataclass
class ChainSection:
    kind: str
    P: Optional[list] = None
    coords: Optional[list] = None
    resolution_digits: int = 6
    a: Optional[float] = None
    noise_support: Optional[list] = None
    noise_weights: Optional[list] = None


@dataclass
class FunctionSection:
    kind: str  # table | indicator | identity | affine
    values: Optional[list] = None
    state: Optional[int] = None
    slope: float = 1.0
    intercept: float = 0.0
    lower: float = 0.0
    upper: float = 1.0


@dataclass
class MeasureSection:
    kind: str = "explicit"  # explicit | dirac | stationary
    support: Optional[list] = None
    weights: Optional[list] = None
    state: Optional[float] = None


@dataclass
class SimulateSection:
    n: int


@dataclass
class IpmSection:
    generator: str
    mu: MeasureSection
    nu: MeasureSection
    points: Optional[list] = None
    pi: Optional[MeasureSection] = None
    bandwidth: Optional[float] = None
    method: str = "auto"  # auto | lp | sweep
    nested: ClassVar = {"mu": MeasureSection, "nu": MeasureSection, "pi": MeasureSection}


@dataclass
class GammaSection:
    generator: str = "TV"
    x_grid: Optional[list] = None
    horizon: int = 50
    bandwidth: Optional[float] = None
    samples: int = 10**4


@dataclass
class BoundEntry:
    family: str
    params: dict = field(default_factory=dict)


@dataclass
class BoundSection:
    n: int
    eps_grid: Any
    bounds: list
    nested: ClassVar = {"bounds": [BoundEntry]}


@dataclass
class ValidateSection:
    n: int
    eps_grid: Any
    families: Optional[list] = None


@dataclass
class ErmSection:
    N: Any
    M_stretch: float
    gamma: float
    span: float
    delta: float = 0.1
    loss: str = "quadratic"
    theta_grid: Any = field(default_factory=lambda: {"start": 0.0, "stop": 1.0, "num": 1001})
    ci_slack: float = 0.02


@dataclass
class SgdSection:
    centers: list
    curvature: list
    beta: float
    batch: int = 1
    lo: float = 0.0
    hi: float = 1.0
    eps: float = 0.1
    delta: float = 0.1
    gamma_bl: Optional[float] = None
    m: Optional[int] = None
    theta0: Optional[list] = None
    ci_slack: float = 0.02


@dataclass
class TwoStateArm:
    eta: float
    p1: float
    lam: float
    slope: float


@dataclass
class ArmSection:
    P: Optional[list] = None
    reward: Optional[list] = None
    two_state: Optional[TwoStateArm] = None
    nested: ClassVar = {"two_state": TwoStateArm}


@dataclass
class BanditSection:
    arms: list
    M_play: int = 1
    horizon: int = 10**4
    L_explore: Optional[float] = None
    generator: str = "W1"
    seeds: int = 200
    checkpoints: list = field(default_factory=lambda: [100, 1000, 10000])
    nested: ClassVar = {"arms": [ArmSection]}


SECTIONS = {"simulate": SimulateSection, "ipm": IpmSection, "gamma": GammaSection,
            "bound": BoundSection, "validate": ValidateSection, "erm": ErmSection,
            "sgd": SgdSection, "bandit": BanditSection}


@dataclass
class ExperimentConfig:
    schema_version: str
    experiment: str
    seed: int = 0
    trials: int = 10**4
    output_path: Optional[str] = None
    chain: Optional[ChainSection] = None
    function: Optional[FunctionSection] = None
    start: Optional[MeasureSection] = None
    simulate: Optional[SimulateSection] = None
    ipm: Optional[IpmSection] = None
    gamma: Optional[GammaSection] = None
    bound: Optional[BoundSection] = None
    validate: Optional[ValidateSection] = None
    erm: Optional[ErmSection] = None
    sgd: Optional[SgdSection] = None
    bandit: Optional[BanditSection] = None
    nested: ClassVar = dict(chain=ChainSection, function=FunctionSection, start=MeasureSection,
                            **SECTIONS)

    def section(self):
        sec = getattr(self, self.experiment)
        if sec is None:
            raise ConfigError(f"experiment {self.experiment!r} needs a {self.experiment!r} section")
        return sec


def parse_config(text: str) -> tuple:
    """Parse JSON text into (ExperimentConfig, raw dict)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION!r}, got {raw.get('schema_version')!r}")
    if raw.get("experiment") not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    return _load(ExperimentConfig, raw, "config"), raw


# ---------------------------------------------------------------- builders

def eps_grid(spec) -> list:
    if isinstance(spec, list):
        g = [float(x) for x in spec]
    elif isinstance(spec, dict):
        keys = set(spec)
        if keys == {"start", "stop", "num"}:
            g = np.linspace(spec["start"], spec["stop"], int(spec["num"])).tolist()
        elif keys == {"start", "stop", "step"}:
            num = int(round((spec["stop"] - spec["start"]) / spec["step"])) + 1
            g = (spec["start"] + spec["step"] * np.arange(num)).tolist()
        else:
            raise ConfigError("grid object needs keys start/stop/num or start/stop/step")
    else:
        raise ConfigError("grid must be a list or a start/stop object")
    g = [float(f"{x:.12g}") for x in g]
    if not g or any(b <= a for a, b in zip(g, g[1:])):
        raise ConfigError("grid must be nonempty and strictly increasing")
    return g


def build_chain(c: Optional[ChainSection]):
    if c is None:
        raise ConfigError("this experiment needs a 'chain' section")
    try:
        if c.kind == "FiniteKernel":
            space = MetricSpace(np.asarray(c.coords, dtype=float)) if c.coords is not None else None
            return FiniteKernel(np.asarray(c.P, dtype=float), space)
        if c.kind == "Ar1Discrete":
            return Ar1Discrete(c.resolution_digits)
        if c.kind == "LinearContraction":
            noise = None
            if c.noise_support is not None:
                noise = DiscreteMeasure(c.noise_support, c.noise_weights)
            return LinearContraction(float(c.a), noise)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"chain: {e}") from None
    raise ConfigError(f"chain.kind {c.kind!r} is not one of FiniteKernel, Ar1Discrete, LinearContraction")


def build_function(f: Optional[FunctionSection], chain) -> FunctionProfile:
    if f is None:
        raise ConfigError("this experiment needs a 'function' section")
    space = getattr(chain, "space", None)
    if f.kind == "table":
        return FunctionProfile.from_table(f.values, space)
    if f.kind == "indicator":
        return FunctionProfile.indicator(int(f.state), chain.n_states, space)
    if f.kind == "identity":
        return FunctionProfile.affine(1.0, 0.0, f.lower, f.upper, "identity")
    if f.kind == "affine":
        return FunctionProfile.affine(f.slope, f.intercept, f.lower, f.upper)
    raise ConfigError(f"function.kind {f.kind!r} unknown")


def build_measure(m: Optional[MeasureSection], chain=None, space=None):
    if m is None or m.kind == "stationary":
        return "stationary"
    space = space if space is not None else getattr(chain, "space", None)
    try:
        if m.kind == "dirac":
            return DiscreteMeasure.dirac(int(m.state) if space is not None else float(m.state), space)
        if m.kind == "explicit":
            return DiscreteMeasure(m.support, m.weights, space)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"measure: {e}") from None
    raise ConfigError(f"measure kind {m.kind!r} unknown")


def _generator(tag: str, bandwidth=None) -> GeneratorClass:
    try:
        return GeneratorClass.parse(tag, bandwidth)
    except ValueError as e:
        raise ConfigError(str(e)) from None


# ---------------------------------------------------------------- runners

def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def run_simulate(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    chain = build_chain(cfg.chain)
    start = build_measure(cfg.start, chain)
    n = cfg.simulate.n
    rows = []
    for t in range(cfg.trials):
        gen = RngStream(cfg.seed, t).generator()
        u = gen.random(1 + (n - 1) * chain.noise_dim)
        x = chain.sample_stationary(u[:1]) if start == "stationary" else sample_from(chain, start, u[:1])
        rows.append((t, 0, x[0]))
        for i in range(1, n):
            x = chain.advance(x, u[None, 1 + (i - 1) * chain.noise_dim: 1 + i * chain.noise_dim])
            rows.append((t, i, x[0]))
    write_csv(out / "simulate.csv", ["trial", "t", "state"], rows)
    return None, ["simulate.csv"]


def run_ipm(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.ipm
    space = MetricSpace(np.asarray(s.points, dtype=float)) if s.points is not None else None
    mu, nu = build_measure(s.mu, space=space), build_measure(s.nu, space=space)
    pi = build_measure(s.pi, space=space) if s.pi is not None else None
    g = _generator(s.generator, s.bandwidth)
    try:
        if s.method == "lp":
            v = ipm_lp(mu, nu, g)
        elif s.method == "sweep":
            v = w1_distance_1d(mu, nu)
        else:
            v = ipm_distance(mu, nu, g, pi=pi)
    except ValueError as e:
        raise ConfigError(f"ipm: {e}") from None
    write_csv(out / "ipm.csv", ["generator", "method", "value", "est_error", "convention"],
              [(str(v.generator), v.method, v.value, v.est_error, v.convention)])
    return None, ["ipm.csv"]


def run_gamma(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.gamma
    chain = build_chain(cfg.chain)
    g = _generator(s.generator, s.bandwidth)
    horizon = opts.horizon or s.horizon
    grid = s.x_grid if s.x_grid is not None else list(range(getattr(chain, "n_states", 0))) or [0.0]
    rep = concentrability(chain, g, grid, horizon=horizon, samples=s.samples, seed=cfg.seed)
    cum = np.cumsum([v for _, v in rep.per_step])
    rows = [(i, v, c, rep.delta_seq[i - 1] if len(rep.delta_seq) >= i else "")
            for (i, v), c in zip(rep.per_step, cum)]
    write_csv(out / "gamma.csv", ["i", "sup_ipm", "cumulative_sup", "dobrushin_prev_lag"], rows)
    summary = dict(generator=str(g), gamma=rep.gamma, gamma_tilde=rep.gamma_tilde,
                   partial_sum=rep.partial_sum, tail_bound=rep.tail_bound, rate=rep.rate,
                   divergent=rep.divergent, truncation_horizon=rep.truncation_horizon,
                   method=rep.method, x_grid=[float(x) for x in rep.x_grid], notes=rep.notes)
    (out / "gamma_summary.json").write_text(json.dumps(summary, indent=2, default=float) + "\n")
    return None, ["gamma.csv", "gamma_summary.json"]


def run_bound(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.bound
    n = opts.horizon or s.n
    grid = eps_grid(s.eps_grid)
    rows, notes = [], {}
    for b in s.bounds:
        try:
            rep = evaluate_bound(BoundSpec(b.family, n, grid, dict(b.params)))
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"bound {b.family}: {e}") from None
        notes[b.family] = dict(threshold=rep.threshold, notes=rep.notes)
        rows += [(rep.family, p.eps, p.value_as_stated, p.value_proof_consistent, p.valid)
                 for p in rep.per_epsilon]
    write_csv(out / "bound.csv", ["family", "epsilon", "value_as_stated", "value_proof_consistent", "valid"], rows)
    (out / "bound_notes.json").write_text(json.dumps(notes, indent=2) + "\n")
    return None, ["bound.csv", "bound_notes.json"]


def run_validate(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.validate
    chain = build_chain(cfg.chain)
    if not isinstance(chain, FiniteKernel):
        raise ConfigError("validate runs on FiniteKernel chains")
    f = build_function(cfg.function, chain)
    start = build_measure(cfg.start, chain)
    if start == "stationary":
        from .chains import stationary_distribution
        start = stationary_distribution(chain)
    if cfg.trials < 1000:
        raise ConfigError("validate needs trials >= 1000 for a published comparison")
    n = opts.horizon or s.n
    grid = eps_grid(s.eps_grid)
    rows, reports, _, consts = validate_finite_chain(chain, f, n, grid, start, cfg.trials, cfg.seed,
                                                     opts.workers, s.families)
    write_csv(out / "validate.csv", ["family", "epsilon", "p_hat", "ci_low", "ci_high", "bound", "verdict"],
              [(r.family, r.eps, r.p_hat, r.ci_low, r.ci_high, r.bound, r.verdict) for r in rows])
    info = dict(gamma_tv=consts.gamma_tv, gamma_tilde=consts.gamma_tilde, doeblin_lam=consts.doeblin_lam,
                doeblin_verified=consts.doeblin_verified, lambda_spec=consts.lambda_spec,
                tv_mu_pi=consts.tv_mu_pi, notes=consts.notes,
                families={k: dict(threshold=r.threshold, notes=r.notes) for k, r in reports.items()})
    (out / "validate_constants.json").write_text(json.dumps(info, indent=2) + "\n")
    return all(r.verdict == "PASS" for r in rows), ["validate.csv", "validate_constants.json"]


def run_erm(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.erm
    chain = build_chain(cfg.chain) if cfg.chain else Ar1Discrete()
    if s.loss != "quadratic":
        raise ConfigError("erm.loss supports 'quadratic'")
    grid = np.asarray(eps_grid(s.theta_grid))
    Ns = s.N if isinstance(s.N, list) else [s.N]
    rows, summary, ok = [], [], True
    for N in Ns:
        p = ErmProblem(quadratic_loss, grid, chain, int(N), s.M_stretch, s.gamma, s.span, s.delta)
        rep = erm_experiment(p, cfg.trials, cfg.seed, s.ci_slack)
        ok &= rep.passed
        rows += [(N, t, rep.theta_hat[t], rep.gaps[t], rep.slack, bool(rep.gaps[t] > rep.slack))
                 for t in range(cfg.trials)]
        summary.append((N, rep.theta_star, rep.slack, rep.exceed_fraction, s.delta + s.ci_slack,
                        "PASS" if rep.passed else "FAIL"))
    write_csv(out / "erm.csv", ["N", "trial", "theta_hat", "gap", "slack", "exceeds"], rows)
    write_csv(out / "erm_verdict.csv", ["N", "theta_star", "slack", "exceed_fraction", "allowed", "verdict"],
              summary)
    return ok, ["erm.csv", "erm_verdict.csv"]


def run_sgd(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.sgd
    try:
        c = SgdConfig(np.asarray(s.centers, dtype=float), np.asarray(s.curvature, dtype=float), s.beta,
                      s.batch, s.lo, s.hi, s.eps, s.delta, s.gamma_bl, opts.horizon or s.m,
                      None if s.theta0 is None else np.asarray(s.theta0, dtype=float))
        c.chain()
    except ValueError as e:
        raise ConfigError(f"sgd: {e}") from None
    rep = sgd_chain_experiment(c, cfg.trials, cfg.seed, s.ci_slack)
    write_csv(out / "sgd.csv", ["trial", "error", "within_eps"],
              [(t, e, bool(e < s.eps)) for t, e in enumerate(rep.errors)])
    write_csv(out / "sgd_contraction.csv", ["pair", "step", "ratio", "alpha"],
              [(f"{a}|{b}", k, r, rep.alpha) for (a, b), k, r in rep.contraction])
    write_csv(out / "sgd_verdict.csv", ["m", "alpha", "gamma_bl", "frequency", "max_contraction", "verdict"],
              [(rep.m, rep.alpha, rep.gamma_bl, rep.frequency, rep.max_contraction,
                "PASS" if rep.passed else "FAIL")])
    return rep.passed, ["sgd.csv", "sgd_contraction.csv", "sgd_verdict.csv"]


def build_bandit(s: BanditSection, horizon: Optional[int] = None) -> BanditConfig:
    arms, rewards = [], []
    for i, a in enumerate(s.arms):
        if a.two_state is not None:
            k, r = two_state_arm(a.two_state.eta, a.two_state.p1, a.two_state.lam, a.two_state.slope)
        elif a.P is not None and a.reward is not None:
            k = FiniteKernel(np.asarray(a.P, dtype=float))
            r = FunctionProfile.from_table(a.reward, k.space)
        else:
            raise ConfigError(f"bandit.arms[{i}] needs P and reward, or two_state")
        arms.append(k)
        rewards.append(r)
    return BanditConfig(arms, rewards, s.M_play, horizon or s.horizon, s.L_explore,
                        _generator(s.generator), checkpoints=tuple(s.checkpoints))


def run_bandit(cfg: ExperimentConfig, out: Path, opts) -> tuple:
    s = cfg.bandit
    try:
        c = build_bandit(s, opts.horizon)
    except ValueError as e:
        raise ConfigError(f"bandit: {e}") from None
    seeds = [cfg.seed * 100003 + k for k in range(s.seeds)]
    traces = ucb_m_batch(c, seeds)
    v = regret_bound_check(c, traces)
    mean = np.mean([tr.regret for tr in traces], axis=0)
    first = traces[0].arm_sets
    write_csv(out / "bandit.csv", ["t", "arm_set", "regret", "bound_rhs"],
              [(t + 1, ";".join(str(a) for a in first[t]), mean[t], regret_rhs(c, t + 1))
               for t in range(c.horizon)])
    write_csv(out / "bandit_verdict.csv", ["n", "mean_regret", "ci_high", "bound_rhs", "verdict"], v.rows)
    write_csv(out / "bandit_pulls.csv", ["arm", "n", "mean_pulls", "ci_high", "lemma_bound", "verdict"],
              v.pull_rows)
    info = dict(eta=c.eta, R=c.R, gamma=c.gamma, L_explore=v.L_explore, lemma_constant=v.lemma_constant,
                theorem_constant=v.theorem_constant, ratio_1e4_1e3=v.ratio)
    (out / "bandit_constants.json").write_text(json.dumps(info, indent=2) + "\n")
    return v.passed, ["bandit.csv", "bandit_verdict.csv", "bandit_pulls.csv", "bandit_constants.json"]


RUNNERS = {"simulate": run_simulate, "ipm": run_ipm, "gamma": run_gamma, "bound": run_bound,
           "validate": run_validate, "erm": run_erm, "sgd": run_sgd, "bandit": run_bandit}


def _canonical(raw: dict) -> str:
    return json.dumps(raw, sort_keys=True, separators=(",", ":"))


def run(config_path, overrides: Optional[dict] = None, experiment: Optional[str] = None) -> int:
    """Execute a config; returns the process exit code."""
    o = argparse.Namespace(seed=None, trials=None, horizon=None, out=None, workers=1)
    for k, v in (overrides or {}).items():
        setattr(o, k, v)
    try:
        try:
            text = Path(config_path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        cfg, raw = parse_config(text)
        if experiment is not None and experiment != cfg.experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {experiment!r}")
        if o.seed is not None:
            cfg.seed = raw["seed"] = int(o.seed)
        if o.trials is not None:
            cfg.trials = raw["trials"] = int(o.trials)
        if o.horizon is not None:
            raw["horizon_override"] = int(o.horizon)
        cfg.section()
        out = Path(o.out or cfg.output_path or os.environ.get(OUT_ENV, "runs"))
        out.mkdir(parents=True, exist_ok=True)
        verdict, files = RUNNERS[cfg.experiment](cfg, out, o)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    manifest = dict(experiment=cfg.experiment, seed=cfg.seed, trials=cfg.trials,
                    config_sha256=hashlib.sha256(_canonical(raw).encode()).hexdigest(),
                    config=raw, files=files,
                    verdict=None if verdict is None else ("PASS" if verdict else "FAIL"),
                    versions=dict(python=platform.python_version(), numpy=np.__version__,
                                  scipy=scipy.__version__, markov_hoeffding=__version__))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    if verdict is not None:
        print(f"VERDICT {cfg.experiment} {'PASS' if verdict else 'FAIL'}")
    return 0 if verdict in (None, True) else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="markov-hoeffding", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--trials", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--workers", type=int, default=1)
    a = ap.parse_args(argv)
    return run(a.config, dict(seed=a.seed, out=a.out, trials=a.trials, horizon=a.horizon,
                              workers=a.workers), experiment=a.command)


if __name__ == "__main__":
    sys.exit(main())
