"""Equidistant token vocabulary, quantization, density discretization,
and windowed uncertainty metrics over discrete distributions.

Token i carries the value ``v_min + i * delta``; a continuous density is
discretized by integrating it over each token's half-open cell
``[v - delta/2, v + delta/2)``, with mass beyond the grid folded into
the edge tokens so nothing is silently lost.

The three windowed metrics (entropy, max probability, local variance)
sum raw probabilities over the window; they deliberately do not
renormalize within it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from .errors import ValidationError

MASS_TOL = 1e-9

# Reference configuration the default window radius is calibrated to.
DEFAULT_VOCAB_SIZE = 4096
DEFAULT_RADIUS = 50
DEFAULT_SPAN = (-15.0, 15.0)


@dataclass(frozen=True)
class Vocabulary:
    """Equidistant value grid: token i has value v_min + i * delta."""

    size: int
    delta: float
    v_min: float

    def __post_init__(self):
        if self.size < 2:
            raise ValidationError(f"vocabulary size must be >= 2, got {self.size}")
        if not (self.delta > 0):
            raise ValidationError(f"delta must be positive, got {self.delta}")

    @classmethod
    def from_span(cls, size: int = DEFAULT_VOCAB_SIZE, span: tuple[float, float] = DEFAULT_SPAN) -> "Vocabulary":
        lo, hi = span
        if not hi > lo:
            raise ValidationError(f"span must be increasing, got {span}")
        return cls(size=size, delta=(hi - lo) / (size - 1), v_min=lo)

    @property
    def v_max(self) -> float:
        return self.v_min + (self.size - 1) * self.delta

    @cached_property
    def token_values(self) -> np.ndarray:
        values = self.v_min + self.delta * np.arange(self.size, dtype=float)
        values.setflags(write=False)
        return values

    def value(self, index: int) -> float:
        if not 0 <= index < self.size:
            raise ValidationError(f"token index {index} out of range [0, {self.size})")
        return self.v_min + index * self.delta


def quantize(value: float, vocab: Vocabulary) -> int:
    """Nearest token index, clipped to the grid.

    Exact midpoints round toward the lower index.
    """
    if math.isnan(value):
        raise ValidationError("cannot quantize NaN")
    x = (value - vocab.v_min) / vocab.delta
    index = math.ceil(x - 0.5)  # midpoint goes to the lower index
    return int(min(max(index, 0), vocab.size - 1))


def default_radius(vocab_size: int, radius_at_reference: int = DEFAULT_RADIUS) -> int:
    """Window radius scaled proportionally with vocabulary size (minimum 2)."""
    return max(2, round(radius_at_reference * vocab_size / DEFAULT_VOCAB_SIZE))


@dataclass(frozen=True)
class DiscreteDistribution:
    """Normalized probability vector over a vocabulary."""

    vocab: Vocabulary
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.vocab.size,):
            raise ValidationError(
                f"probs must have shape ({self.vocab.size},), got {probs.shape}"
            )
        if not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be finite")
        if np.any(probs < 0):
            raise ValidationError("probabilities must be nonnegative")
        total = float(probs.sum())
        if not abs(total - 1.0) <= MASS_TOL:
            raise ValidationError(f"probabilities must sum to 1 within {MASS_TOL}, got {total!r}")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class Neighborhood:
    """Token window [center - radius, center + radius], clipped to the grid."""

    center: int
    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValidationError(f"radius must be >= 1, got {self.radius}")

    def bounds(self, vocab: Vocabulary) -> tuple[int, int]:
        lo = max(0, self.center - self.radius)
        hi = min(vocab.size - 1, self.center + self.radius)
        if lo > hi:
            raise ValidationError(
                f"window [{self.center - self.radius}, {self.center + self.radius}] "
                f"does not intersect the grid [0, {vocab.size - 1}]"
            )
        return lo, hi


def _frozen_dist(family: str, mean: float, variance: float, df: float):
    """scipy distribution of the requested family with the requested variance.

    For cauchy the `variance` argument is the squared scale.
    """
    if family == "gaussian":
        return stats.norm(loc=mean, scale=math.sqrt(variance))
    if family == "laplace":
        return stats.laplace(loc=mean, scale=math.sqrt(variance / 2.0))
    if family == "student_t":
        if df <= 2:
            raise ValidationError("student_t discretization requires df > 2")
        return stats.t(df, loc=mean, scale=math.sqrt(variance * (df - 2.0) / df))
    if family == "cauchy":
        return stats.cauchy(loc=mean, scale=math.sqrt(variance))
    raise ValidationError(f"unsupported density family {family!r}")


def discretize_density(
    mean: float,
    variance: float,
    family: str,
    vocab: Vocabulary,
    df: float = 5.0,
) -> DiscreteDistribution:
    """Integrate a continuous density over the token cells.

    Per-token mass is CDF(v + delta/2) - CDF(v - delta/2); the tails
    beyond the grid are folded into the edge tokens, then the vector is
    renormalized. Zero variance yields a point mass at quantize(mean).
    """
    if not math.isfinite(mean):
        raise ValidationError(f"mean must be finite, got {mean}")
    if math.isnan(variance) or variance < 0:
        raise ValidationError(f"variance must be >= 0, got {variance}")
    probs = np.zeros(vocab.size, dtype=float)
    if variance == 0.0:
        probs[quantize(mean, vocab)] = 1.0
        return DiscreteDistribution(vocab=vocab, probs=probs)
    dist = _frozen_dist(family, mean, variance, df)
    edges = vocab.v_min + vocab.delta * (np.arange(vocab.size + 1, dtype=float) - 0.5)
    cdf = dist.cdf(edges)
    probs = np.diff(cdf)
    probs[0] += cdf[0]
    probs[-1] += 1.0 - cdf[-1]
    np.clip(probs, 0.0, None, out=probs)
    total = probs.sum()
    if total <= 0:
        raise ValidationError("discretized density has no mass on the grid")
    probs /= total
    return DiscreteDistribution(vocab=vocab, probs=probs)


def dist_mean(d: DiscreteDistribution) -> float:
    """First moment over token values."""
    return float(np.dot(d.probs, d.vocab.token_values))


def dist_variance_full(d: DiscreteDistribution) -> float:
    """Second central moment over the full vocabulary."""
    mu = dist_mean(d)
    centered = d.vocab.token_values - mu
    return float(np.dot(d.probs, centered * centered))


def entropy(d: DiscreteDistribution, u: Neighborhood) -> float:
    """-sum P ln P over the window, with 0 ln 0 := 0 and raw (unrenormalized) P."""
    lo, hi = u.bounds(d.vocab)
    p = d.probs[lo : hi + 1]
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def max_prob(d: DiscreteDistribution, u: Neighborhood) -> float:
    """Largest raw probability inside the window."""
    lo, hi = u.bounds(d.vocab)
    return float(np.max(d.probs[lo : hi + 1]))


def local_variance(d: DiscreteDistribution, u: Neighborhood) -> float:
    """Concentration around the window-local mean, in value units.

    The local mean normalizes by the window mass, but the spread sums raw
    probabilities; mass outside the window is ignored.
    """
    lo, hi = u.bounds(d.vocab)
    p = d.probs[lo : hi + 1]
    total = float(p.sum())
    if total <= 0:
        return 0.0
    x = d.vocab.token_values[lo : hi + 1]
    mu = float(np.dot(p, x)) / total
    centered = x - mu
    return float(np.dot(p, centered * centered))


def neighborhood_around_mean(d: DiscreteDistribution, radius: int) -> Neighborhood:
    """Window centered on the quantized distribution mean."""
    return Neighborhood(center=quantize(dist_mean(d), d.vocab), radius=radius)


def cross_entropy(p: DiscreteDistribution, q: DiscreteDistribution, floor: float = 1e-300) -> float:
    """-sum p ln q over a shared vocabulary, flooring q to keep the sum finite."""
    if p.vocab != q.vocab:
        raise ValidationError("cross entropy requires a shared vocabulary")
    mask = p.probs > 0
    q_floored = np.maximum(q.probs[mask], floor)
    return float(-np.sum(p.probs[mask] * np.log(q_floored)))
