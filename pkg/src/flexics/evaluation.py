"""Ground truth for sampler accuracy: exact targets, ideal sampling, divergences.

All logarithms are base 2, so the Jensen-Shannon divergence lies in [0, 1].
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping

import numpy as np

from .weightgen import UnsatisfiableTask

__all__ = [
    "TargetDistribution",
    "EmpiricalDistribution",
    "enumerate_all",
    "target_from_qualities",
    "ideal_sample",
    "kl_divergence",
    "js_divergence",
    "js_components",
    "factor_band_profile",
    "band_fraction",
    "pattern_key",
]


def pattern_key(pattern) -> str:
    """Stable text key: ``1 2 5`` for itemsets, ``1 2|4`` for tilings."""
    if pattern and isinstance(pattern[0], tuple):
        return "|".join(" ".join(map(str, p)) for p in pattern)
    return " ".join(map(str, pattern))


@dataclass
class TargetDistribution:
    support: list
    probabilities: np.ndarray
    z: float
    qualities: np.ndarray

    def __post_init__(self):
        self.index = {p: k for k, p in enumerate(self.support)}

    def __len__(self):
        return len(self.support)

    def as_dict(self) -> Dict[object, float]:
        return dict(zip(self.support, self.probabilities.tolist()))


@dataclass
class EmpiricalDistribution:
    counts: Counter
    total: int

    @classmethod
    def from_samples(cls, samples: Iterable) -> "EmpiricalDistribution":
        c = Counter(samples)
        return cls(c, sum(c.values()))

    def probability(self, pattern) -> float:
        return self.counts.get(pattern, 0) / self.total if self.total else 0.0

    def as_dict(self) -> Dict[object, float]:
        return {p: c / self.total for p, c in self.counts.items()} if self.total else {}


def target_from_qualities(patterns, qualities) -> TargetDistribution:
    if not len(patterns):
        raise UnsatisfiableTask("the constrained task has no solutions")
    q = np.asarray(qualities, dtype=float)
    if np.any(q <= 0):
        raise ValueError("qualities must be positive")
    z = math.fsum(q.tolist())
    return TargetDistribution(list(patterns), q / z, z, q)


def enumerate_all(oracle) -> TargetDistribution:
    """Every solution of the oracle's task with its exact target probability."""
    from .measures import evaluate_quality

    cell = oracle.solve_bounded((), math.inf)
    patterns = [p for p, _ in cell.solutions]
    db = getattr(oracle, "db", None)
    spec = oracle.spec
    if db is not None:
        qualities = [evaluate_quality(spec, p, db) for p in patterns]
    else:
        qualities = [w * spec.scaling_constant for _, w in cell.solutions]
    return target_from_qualities(patterns, qualities)


def ideal_sample(dist: TargetDistribution, rng: np.random.Generator, n: int) -> EmpiricalDistribution:
    """``n`` independent draws from the target, as multiplicities."""
    if n < 0:
        raise ValueError("n must be non-negative")
    counts = rng.multinomial(n, dist.probabilities) if n else np.zeros(len(dist), dtype=int)
    return EmpiricalDistribution(Counter({p: int(c) for p, c in zip(dist.support, counts) if c}), n)


def _as_mapping(d) -> Mapping:
    if isinstance(d, TargetDistribution) or isinstance(d, EmpiricalDistribution):
        return d.as_dict()
    if isinstance(d, Mapping):
        return d
    return dict(enumerate(np.asarray(d, dtype=float).tolist()))


def kl_divergence(p, q) -> float:
    """KL(p || q) in bits; raises when p puts mass where q has none."""
    p, q = _as_mapping(p), _as_mapping(q)
    total = 0.0
    for x, px in p.items():
        if px <= 0:
            continue
        qx = q.get(x, 0.0)
        if qx <= 0:
            raise ValueError(f"KL undefined: q({x!r}) = 0 while p({x!r}) > 0")
        total += px * math.log2(px / qx)
    return max(total, 0.0)


def _js_parts(p, q):
    p, q = _as_mapping(p), _as_mapping(q)
    keys = set(p) | set(q)
    m = {x: 0.5 * (p.get(x, 0.0) + q.get(x, 0.0)) for x in keys}
    return kl_divergence(p, m), kl_divergence(q, m)


def js_divergence(p_t, p_e) -> float:
    """Jensen-Shannon divergence (bits) between two distributions."""
    a, b = _js_parts(p_t, p_e)
    return min(1.0, max(0.0, 0.5 * (a + b)))


def js_components(p_t, p_e):
    """``(js, KL(P_T||P_M), KL(P_E||P_M))``."""
    a, b = _js_parts(p_t, p_e)
    return min(1.0, max(0.0, 0.5 * (a + b))), a, b


def band_fraction(target: Mapping, empirical: Mapping, low: float, high: float) -> float:
    """Fraction of the target support whose empirical/target ratio lies in [low, high]."""
    if not target:
        return 1.0
    inside = 0
    for x, pt in target.items():
        ratio = empirical.get(x, 0.0) / pt
        if low <= ratio <= high:
            inside += 1
    return inside / len(target)


def factor_band_profile(p_t, p_e, factor: float) -> float:
    """Fraction of patterns sampled within a multiplicative ``factor`` of their target."""
    if factor <= 1:
        raise ValueError("factor must exceed 1")
    return band_fraction(_as_mapping(p_t), _as_mapping(p_e), 1.0 / factor, factor)
