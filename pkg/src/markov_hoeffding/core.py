"""Shared value types: metric spaces, finite measures, observables, generators, RNG streams."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

MASS_TOL = 1e-12
LIP_RTOL = 1e-9
# atoms of real-valued measures closer than this are treated as the same point
MERGE_ATOL = 1e-12


class ProfileIncomplete(ValueError):
    """A FunctionProfile lacks an attribute the requested generator needs."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricSpace:
    """Finite set of labelled points in R^d with the Euclidean metric."""

    coords: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] == 0:
            raise ValueError("coords must be a nonempty (n, d) array")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(c.shape[0])))
        elif len(self.labels) != c.shape[0]:
            raise ValueError("one label per point")

    @classmethod
    def line(cls, n: int) -> "MetricSpace":
        """States 0..n-1 placed at the integers."""
        return cls(np.arange(n, dtype=float))

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.coords[i] - self.coords[j]))

    def dist_matrix(self, idx=None) -> np.ndarray:
        c = self.coords if idx is None else self.coords[np.asarray(idx)]
        return pairwise_dist(c)


def pairwise_dist(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    diff = c[:, None, :] - c[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    With ``space`` set, ``support`` holds integer indices into it; otherwise
    ``support`` holds raw reals (1-D chains).
    """

    support: np.ndarray
    weights: np.ndarray
    space: Optional[MetricSpace] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if self.space is not None:
            s = np.asarray(self.support, dtype=np.int64).ravel()
            if s.size and (s.min() < 0 or s.max() >= self.space.size):
                raise ValueError("support index outside the metric space")
        else:
            s = np.asarray(self.support, dtype=float).ravel()
            if not np.all(np.isfinite(s)):
                raise ValueError("support points must be finite")
        if s.shape != w.shape or s.size == 0:
            raise ValueError("support and weights must be nonempty and aligned")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        s = s.copy()
        w = w.copy()
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    # constructors
    @classmethod
    def dirac(cls, x, space: Optional[MetricSpace] = None) -> "DiscreteMeasure":
        return cls(np.array([x]), np.array([1.0]), space)

    @classmethod
    def uniform(cls, points, space: Optional[MetricSpace] = None) -> "DiscreteMeasure":
        pts = np.asarray(points).ravel()
        return cls(pts, np.full(pts.size, 1.0 / pts.size), space)

    @classmethod
    def from_vector(cls, p, space: Optional[MetricSpace] = None) -> "DiscreteMeasure":
        """Measure on states 0..len(p)-1 from a probability vector (zeros dropped)."""
        p = np.asarray(p, dtype=float)
        if space is None:
            space = MetricSpace.line(p.size)
        idx = np.flatnonzero(p > 0)
        return cls(idx, p[idx], space)

    @classmethod
    def from_samples(cls, samples) -> "DiscreteMeasure":
        """Empirical measure of real samples, duplicates merged."""
        vals, counts = np.unique(np.asarray(samples, dtype=float).ravel(), return_counts=True)
        return cls(vals, counts / counts.sum())

    @property
    def is_real(self) -> bool:
        return self.space is None

    def points(self) -> np.ndarray:
        """Atom coordinates as an (m, d) array."""
        if self.space is None:
            return self.support[:, None]
        return self.space.coords[self.support]

    def to_vector(self, size: Optional[int] = None) -> np.ndarray:
        """Dense probability vector over space indices."""
        if self.space is None:
            raise ValueError("dense vectors need a finite metric space")
        size = self.space.size if size is None else size
        v = np.zeros(size)
        np.add.at(v, self.support, self.weights)
        return v

    def expect(self, fn: Callable) -> float:
        return float(np.dot(self.weights, np.asarray(fn(self.support), dtype=float)))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points()

    def pushforward(self, fn: Callable) -> "DiscreteMeasure":
        """Image measure of a real-valued map (duplicates merged)."""
        if self.space is not None:
            raise ValueError("pushforward is defined for real-supported measures")
        return merge_atoms(np.asarray(fn(self.support), dtype=float), self.weights)


def merge_atoms(values, weights, atol: float = MERGE_ATOL) -> DiscreteMeasure:
    """Real-supported measure with atoms within ``atol`` fused."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    new = np.ones(v.size, dtype=bool)
    new[1:] = np.diff(v) > atol
    groups = np.cumsum(new) - 1
    merged_w = np.bincount(groups, weights=w)
    return DiscreteMeasure(v[new], merged_w / merged_w.sum())


@dataclass(frozen=True)
class GeneratorClass:
    """Tag naming the function class that generates an IPM."""

    tag: str
    bandwidth: Optional[float] = None

    TAGS = ("TV", "W1", "BL", "MMD", "L2Pi")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown generator {self.tag!r}")
        if self.tag == "MMD" and not (self.bandwidth and self.bandwidth > 0):
            raise ValueError("MMD needs a positive bandwidth")

    @classmethod
    def parse(cls, text: str, bandwidth: Optional[float] = None) -> "GeneratorClass":
        tag = {t.lower(): t for t in cls.TAGS}.get(str(text).strip().lower(), text)
        return cls(tag, bandwidth if tag == "MMD" else None)

    def __str__(self):
        return f"MMD({self.bandwidth:g})" if self.tag == "MMD" else self.tag


TV = GeneratorClass("TV")
W1 = GeneratorClass("W1")
BL = GeneratorClass("BL")
L2PI = GeneratorClass("L2Pi")


@dataclass(frozen=True)
class FunctionProfile:
    """Scalar observable with the norms the bounds consume."""

    evaluate: Callable
    lower: float
    upper: float
    sup_norm: float
    lipschitz: Optional[float] = None
    name: str = "f"

    def __post_init__(self):
        if self.upper < self.lower:
            raise ValueError("upper < lower")
        if self.sup_norm < max(abs(self.lower), abs(self.upper)) - 1e-12:
            raise ValueError("sup_norm below the declared range")

    @property
    def span(self) -> float:
        return self.upper - self.lower

    def __call__(self, x):
        return self.evaluate(x)

    @classmethod
    def from_table(cls, values, space: Optional[MetricSpace] = None, name="f") -> "FunctionProfile":
        """Observable on a finite state space given by its value table."""
        vals = _frozen(values)
        space = MetricSpace.line(vals.size) if space is None else space
        if space.size != vals.size:
            raise ValueError("one value per state")
        lip = 0.0
        if vals.size > 1:
            d = space.dist_matrix()
            off = ~np.eye(vals.size, dtype=bool)
            lip = float(np.max(np.abs(vals[:, None] - vals[None, :])[off] / d[off]))
        return cls(lambda i: vals[np.asarray(i, dtype=np.int64)], float(vals.min()),
                   float(vals.max()), float(np.abs(vals).max()), lip, name)

    @classmethod
    def indicator(cls, state: int, n_states: int, space: Optional[MetricSpace] = None) -> "FunctionProfile":
        v = np.zeros(n_states)
        v[state] = 1.0
        return cls.from_table(v, space, name=f"1[{state}]")

    @classmethod
    def affine(cls, slope: float, intercept: float, lo: float, hi: float, name="affine") -> "FunctionProfile":
        """x -> slope*x + intercept on the interval [lo, hi]."""
        ends = (slope * lo + intercept, slope * hi + intercept)
        return cls(lambda x: slope * np.asarray(x, dtype=float) + intercept, min(ends), max(ends),
                   max(abs(ends[0]), abs(ends[1])), abs(slope), name)


def estimate_lipschitz(fn: Callable, points) -> float:
    """Largest difference quotient over all pairs of the given 1-D points."""
    x = np.unique(np.asarray(points, dtype=float).ravel())
    if x.size < 2:
        return 0.0
    y = np.asarray(fn(x), dtype=float)
    # for 1-D points the max over all pairs is attained by neighbours
    return float(np.max(np.abs(np.diff(y)) / np.diff(x)))


def check_profile(f: FunctionProfile, states, dist: Optional[np.ndarray] = None, coords=None) -> None:
    """Raise if f leaves [lower, upper] or breaks its Lipschitz claim on the sample."""
    y = np.asarray(f(states), dtype=float)
    tol = 1e-12 * max(1.0, f.sup_norm)
    if np.any(y < f.lower - tol) or np.any(y > f.upper + tol):
        raise ValueError("observable leaves its declared range")
    if f.lipschitz is None:
        return
    if dist is None:
        dist = pairwise_dist(np.asarray(states if coords is None else coords, dtype=float))
    gap = np.abs(y[:, None] - y[None, :])
    if np.any(gap > f.lipschitz * dist * (1 + LIP_RTOL) + 1e-15):
        raise ValueError("observable violates its declared Lipschitz constant")


def minimal_stretch(f: FunctionProfile, g: GeneratorClass, pi: Optional[DiscreteMeasure] = None) -> float:
    """Smallest m > 0 with f in m times the unit ball of the generator."""
    if g.tag == "TV":
        return float(f.sup_norm)
    if g.tag in ("W1", "BL"):
        if f.lipschitz is None:
            raise ProfileIncomplete(f"profile incomplete: {g.tag} needs a Lipschitz constant")
        return float(f.lipschitz if g.tag == "W1" else max(f.sup_norm, f.lipschitz))
    if g.tag == "L2Pi":
        if pi is None:
            raise ProfileIncomplete("profile incomplete: L2Pi needs the stationary measure")
        return float(np.sqrt(pi.expect(lambda s: np.asarray(f(s), dtype=float) ** 2)))
    raise ProfileIncomplete("profile incomplete: RKHS norm of a generic observable is not available")


@dataclass(frozen=True)
class RngStream:
    """Counter-based substream keyed by (master_seed, stream_id).

    The Philox key is a hash of the pair, so the stream is the same whatever
    order or thread it is created in.
    """

    master_seed: int
    stream_id: int = 0

    def key(self) -> int:
        raw = struct.pack("<QQ", self.master_seed % 2**64, self.stream_id % 2**64)
        return int.from_bytes(hashlib.blake2b(raw, digest_size=16).digest(), "little")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))

    def child(self, index: int) -> "RngStream":
        """Derived stream, e.g. one per trial or per bandit arm."""
        raw = struct.pack("<QQQ", self.master_seed % 2**64, self.stream_id % 2**64, index % 2**64)
        sid = int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")
        return RngStream(self.master_seed, sid)
