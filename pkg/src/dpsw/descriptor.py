"""Trajectory statistics and the nu/phi/psi/upsilon feature hierarchy.

Layout is canonical: rules ``min`` before ``max``, thresholds ascending,
memories ascending, then the ``N_BINS`` histogram bins ``mu+1 .. mu+N_BINS``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .pixel_map import MAX_STEP, MIN_STEP, RULES, Raster, Rule, WalkMap
from .walk import Trajectory, walk_arrays

N_BINS = 4
DEFAULT_MEMORIES = tuple(range(7))
DEFAULT_THRESHOLDS = tuple(range(10))


@dataclass(frozen=True)
class JointDistribution:
    """Frequency of ``(tau, rho)`` pairs over all walks of one configuration.

    Counts are kept as integers; ``frequency`` divides by ``n_walks``.
    """

    mu: int
    rule: Rule
    k: int
    counts: dict
    n_walks: int

    def frequency(self, tau: int, rho: int) -> float:
        return self.counts.get((tau, rho), 0) / self.n_walks

    @property
    def mass(self) -> dict:
        return {pair: c / self.n_walks for pair, c in self.counts.items()}

    def exact_mass(self) -> dict:
        return {pair: Fraction(c, self.n_walks) for pair, c in self.counts.items()}

    def length_count(self, l: int) -> int:
        """Number of walks with ``rho >= 1`` and ``tau + rho == l``."""
        return sum(c for (tau, rho), c in self.counts.items() if rho >= 1 and tau + rho == l)


def joint_distribution(trajectories, mu: int, rule: Rule, k: int) -> JointDistribution:
    """Accepts a sequence of ``Trajectory`` or a ``(taus, rhos)`` array pair."""
    if isinstance(trajectories, tuple) and len(trajectories) == 2 and isinstance(trajectories[0], np.ndarray):
        taus, rhos = trajectories
        if taus.size == 0:
            raise ValueError("cannot build a distribution from zero trajectories")
        span = int(rhos.max()) + 1
        keys, cnt = np.unique(taus.astype(np.int64) * span + rhos, return_counts=True)
        counts = {(int(key // span), int(key % span)): int(c) for key, c in zip(keys, cnt)}
        n = int(taus.size)
    else:
        trajectories = list(trajectories)
        if not trajectories:
            raise ValueError("cannot build a distribution from zero trajectories")
        counts = dict(Counter((int(t.tau), int(t.rho)) for t in trajectories))
        n = len(trajectories)
    return JointDistribution(mu=mu, rule=rule, k=k, counts=counts, n_walks=n)


def histogram(dist: JointDistribution, l: int) -> float:
    """Share of walks whose transient plus attractor spans ``l`` pixels."""
    if l < 1:
        raise ValueError(f"histogram length must be >= 1, got {l}")
    return dist.length_count(l) / dist.n_walks


class Column(NamedTuple):
    rule: str
    k: int
    mu: int
    l: int


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    layout: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (len(self.layout),):
            raise ValueError(f"{vals.shape[0]} values for {len(self.layout)} layout columns")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "layout", tuple(Column(*c) for c in self.layout))

    def __len__(self):
        return len(self.layout)

    def select(self, keep) -> "FeatureVector":
        """Sub-vector of the columns for which ``keep(column)`` is true."""
        mask = [bool(keep(c)) for c in self.layout]
        return FeatureVector(self.values[mask], tuple(c for c, m in zip(self.layout, mask) if m))

    @staticmethod
    def concat(parts: Sequence["FeatureVector"]) -> "FeatureVector":
        return FeatureVector(
            np.concatenate([p.values for p in parts]) if parts else np.empty(0),
            tuple(c for p in parts for c in p.layout),
        )


def nu_vector(dist: JointDistribution, n_bins: int = N_BINS) -> FeatureVector:
    ls = range(dist.mu + 1, dist.mu + 1 + n_bins)
    return FeatureVector(
        np.array([histogram(dist, l) for l in ls]),
        tuple(Column(dist.rule, dist.k, dist.mu, l) for l in ls),
    )


def _canonical(values: Iterable[int], what: str) -> tuple[int, ...]:
    out = tuple(sorted(set(int(v) for v in values)))
    if not out:
        raise ValueError(f"{what} set must be non-empty")
    if out[0] < 0:
        raise ValueError(f"{what} values must be >= 0")
    return out


def _canonical_rules(rules: Iterable[str]) -> tuple[str, ...]:
    rules = set(rules)
    bad = rules - set(RULES)
    if bad or not rules:
        raise ValueError(f"rules must be a non-empty subset of {RULES}, got {sorted(rules)}")
    return tuple(r for r in RULES if r in rules)


@dataclass(frozen=True)
class Extractor:
    """Feature extraction settings shared by every image of a corpus."""

    memories: tuple = DEFAULT_MEMORIES
    thresholds: tuple = DEFAULT_THRESHOLDS
    rules: tuple = ("min",)
    min_step: int = MIN_STEP
    max_step: int = MAX_STEP
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "memories", _canonical(self.memories, "memory"))
        object.__setattr__(self, "thresholds", _canonical(self.thresholds, "threshold"))
        object.__setattr__(self, "rules", _canonical_rules(self.rules))

    def walk_map(self, raster: Raster, rule: Rule, k: int) -> WalkMap:
        return WalkMap(raster, rule, k, self.min_step, self.max_step)

    def phi(self, raster: Raster, rule: Rule, k: int) -> FeatureVector:
        wm = self.walk_map(raster, rule, k)
        parts = []
        for mu in self.memories:
            dist = joint_distribution(walk_arrays(wm, mu, self.workers), mu, rule, k)
            parts.append(nu_vector(dist))
        return FeatureVector.concat(parts)

    def psi(self, raster: Raster, rule: Rule) -> FeatureVector:
        return FeatureVector.concat([self.phi(raster, rule, k) for k in self.thresholds])

    def extract(self, raster: Raster) -> FeatureVector:
        return FeatureVector.concat([self.psi(raster, r) for r in self.rules])

    def layout(self) -> tuple:
        return tuple(
            Column(r, k, mu, mu + 1 + b)
            for r in self.rules
            for k in self.thresholds
            for mu in self.memories
            for b in range(N_BINS)
        )

    @property
    def n_features(self) -> int:
        return len(self.rules) * len(self.thresholds) * len(self.memories) * N_BINS


def phi_vector(raster: Raster, rule: Rule = "min", k: int = 0, memories=DEFAULT_MEMORIES, **kw) -> FeatureVector:
    return Extractor(memories=memories, thresholds=(k,), rules=(rule,), **kw).phi(raster, rule, k)


def psi_vector(raster: Raster, rule: Rule = "min", thresholds=DEFAULT_THRESHOLDS, memories=DEFAULT_MEMORIES, **kw) -> FeatureVector:
    return Extractor(memories=memories, thresholds=thresholds, rules=(rule,), **kw).psi(raster, rule)


def upsilon_vector(raster: Raster, thresholds=DEFAULT_THRESHOLDS, memories=DEFAULT_MEMORIES, **kw) -> FeatureVector:
    return Extractor(memories=memories, thresholds=thresholds, rules=RULES, **kw).extract(raster)
