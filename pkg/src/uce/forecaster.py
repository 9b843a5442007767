"""Forecast models exposing per-prefix internal distributions, sampling
strategies that rescale their uncertainty, and recursive generation.

The synthetic ideal model reproduces the true conditional law of its
process: given any prefix of length n it returns the discretized noise
density centered on the trend continuation, with variance given by the
convex recursion over the last l effective variances. During recursive
generation each strategy-modified step feeds its rescaled variance
(gamma * sigma2) back into the recursion, which is what drives the
uncertainty contraction (gamma < 1), preservation (gamma = 1) or
explosion (gamma > 1) of the whole trajectory.

A replay model serves stored per-step rows instead (either from an
in-memory generation run or a distribution-dump file); it is how
generated candidates and real TSLM dumps are scored.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnsupportedDetectorError, ValidationError
from .process import NoiseSpec, TrendSpec, variance_sequence
from .seeding import rng_for
from .vocab import (
    DiscreteDistribution,
    Vocabulary,
    discretize_density,
    dist_mean,
    dist_variance_full,
    quantize,
)

# ---------------------------------------------------------------------------
# Sampling strategies


@dataclass(frozen=True)
class Identity:
    """Sample straight from the internal distribution (gamma = 1)."""


@dataclass(frozen=True)
class Temperature:
    """Probability scaling p^(1/T), renormalized.

    Applying 1/T to probabilities is equivalent to dividing logits by T.
    For a Gaussian density the result is Gaussian with variance T*sigma2,
    so the measured gamma equals T.
    """

    t: float

    def __post_init__(self):
        if not (self.t > 0):
            raise ValidationError(f"temperature must be positive, got {self.t}")


@dataclass(frozen=True)
class SymmetricTruncate:
    """Zero all tokens outside mean +- a * std, then renormalize.

    `a` is measured in standard deviations of the distribution being
    truncated, so the operation is scale-relative.
    """

    a: float

    def __post_init__(self):
        if not (self.a > 0):
            raise ValidationError(f"truncation width must be positive, got {self.a}")


@dataclass(frozen=True)
class TopKMedian:
    """Keep the k most probable tokens; generation then takes the median
    of the renormalized support (deterministic)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")


SamplingStrategy = Identity | Temperature | SymmetricTruncate | TopKMedian


def apply_strategy(d: DiscreteDistribution, s: SamplingStrategy) -> DiscreteDistribution:
    """Distribution actually sampled from after the strategy modifies d."""
    if isinstance(s, Identity):
        return d
    probs = np.array(d.probs, dtype=float)
    if isinstance(s, Temperature):
        mask = probs > 0
        logp = np.log(probs[mask])
        logp = (logp - logp.max()) / s.t
        out = np.zeros_like(probs)
        out[mask] = np.exp(logp)
        out /= out.sum()
        return DiscreteDistribution(vocab=d.vocab, probs=out)
    if isinstance(s, SymmetricTruncate):
        mu = dist_mean(d)
        sd = np.sqrt(dist_variance_full(d))
        values = d.vocab.token_values
        keep = (values >= mu - s.a * sd) & (values <= mu + s.a * sd)
        probs[~keep] = 0.0
        total = probs.sum()
        if total <= 0:
            raise ValidationError("truncation removed all probability mass")
        probs /= total
        return DiscreteDistribution(vocab=d.vocab, probs=probs)
    if isinstance(s, TopKMedian):
        # ties broken toward the lower token index
        order = np.lexsort((np.arange(len(probs)), -probs))
        keep = order[: s.k]
        out = np.zeros_like(probs)
        out[keep] = probs[keep]
        total = out.sum()
        if total <= 0:
            raise ValidationError("top-k selection removed all probability mass")
        out /= total
        return DiscreteDistribution(vocab=d.vocab, probs=out)
    raise ValidationError(f"unknown sampling strategy {s!r}")


def gamma_of(original: DiscreteDistribution, modified: DiscreteDistribution) -> float:
    """Empirical variance ratio var(modified) / var(original)."""
    var0 = dist_variance_full(original)
    if var0 <= 0:
        raise ValidationError("gamma is undefined for a zero-variance distribution")
    return dist_variance_full(modified) / var0


def median_token(d: DiscreteDistribution) -> int:
    """Smallest token index whose cumulative probability reaches 1/2."""
    cdf = np.cumsum(d.probs)
    return int(np.searchsorted(cdf, 0.5))


# Fine unit-variance grid used to measure each strategy's variance ratio
# once per (strategy, family). Temperature and symmetric truncation act
# scale-relatively on location-scale families, so the ratio measured at
# unit variance applies at every scale; measuring on a dedicated fine
# grid keeps the ratio accurate even when the model grid is coarse
# relative to the current standard deviation.
_CANONICAL_VOCAB = Vocabulary(size=6001, delta=0.004, v_min=-12.0)
_GAMMA_CACHE: dict[tuple, float] = {}


def strategy_gamma(s: SamplingStrategy, family: str, df: float = 5.0) -> float:
    """Variance ratio the strategy applies to this noise family."""
    if isinstance(s, Identity):
        return 1.0
    if isinstance(s, TopKMedian):
        raise ValidationError("top-k median sampling has no scale-free variance ratio")
    key = (s, family, df)
    if key not in _GAMMA_CACHE:
        base = discretize_density(0.0, 1.0, family, _CANONICAL_VOCAB, df=df)
        _GAMMA_CACHE[key] = gamma_of(base, apply_strategy(base, s))
    return _GAMMA_CACHE[key]


# ---------------------------------------------------------------------------
# Models


class ForecastModel(ABC):
    """Source of per-prefix internal next-value distributions."""

    @abstractmethod
    def vocabulary(self) -> Vocabulary: ...

    @property
    @abstractmethod
    def min_prefix(self) -> int:
        """Shortest prefix the model accepts."""

    @abstractmethod
    def internal_distribution(self, prefix: Sequence[float]) -> DiscreteDistribution:
        """Next-value distribution given the prefix; deterministic per prefix."""

    def max_step(self, n: int) -> int:
        """Last step t <= n the model can score (row for step t needs prefix t-1)."""
        return n

    def scoreable_steps(self, n: int) -> range:
        """Steps t of a length-n series for which a row exists."""
        return range(self.min_prefix + 1, self.max_step(n) + 1)

    def tokenize(self, values: Sequence[float]) -> np.ndarray:
        """Token index of each value on the model's grid."""
        vocab = self.vocabulary()
        return np.array([quantize(float(v), vocab) for v in values], dtype=int)

    def observed_tokens(self, values: Sequence[float]) -> np.ndarray:
        """Tokens of the candidate series itself (models backed by a dump
        return the stored tokens, which are authoritative for scaled grids)."""
        return self.tokenize(values)

    @property
    def supports_generation(self) -> bool:
        return False

    def regenerate(self, prefix: Sequence[float], horizon: int, seed: int) -> np.ndarray:
        raise UnsupportedDetectorError(
            f"{type(self).__name__} cannot regenerate continuations"
        )


class SyntheticIdealModel(ForecastModel):
    """Ideal forecaster for a known trend + noise process.

    Its internal distribution given a length-n prefix is the true
    conditional law of step n+1: the noise density centered at the trend
    continuation with variance from the convex recursion. Because the
    noise is independent across steps, that law does not depend on the
    realized prefix values, only on the prefix length.
    """

    def __init__(
        self,
        trend: TrendSpec,
        noise: NoiseSpec,
        vocab: Vocabulary,
        min_history: int = 1,
        name: str = "synthetic-ideal",
    ):
        if min_history < 1:
            raise ValidationError(f"min_history must be >= 1, got {min_history}")
        self.trend = trend
        self.noise = noise
        self._vocab = vocab
        self._min_history = min_history
        self.name = name
        # memoized pure results: step rows keyed by (t, variance); the
        # true-process variance ledger, index t-1 holding sigma2_t
        self._step_cache: dict[tuple[int, float], DiscreteDistribution] = {}
        self._variances = np.empty(0, dtype=float)

    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @property
    def min_prefix(self) -> int:
        return self._min_history

    def true_variance(self, t: int) -> float:
        """sigma2_t of the underlying process (t >= 1)."""
        if t < 1:
            raise ValidationError(f"step must be >= 1, got {t}")
        if t > len(self._variances):
            self._variances = variance_sequence(self.noise, max(t, 2 * len(self._variances)))
        return float(self._variances[t - 1])

    def trailing_variances(self, t_last: int) -> list[float]:
        """Effective variances at steps t_last-l+1 .. t_last, oldest first."""
        l = self.noise.order
        out = []
        for t in range(t_last - l + 1, t_last + 1):
            if t >= 1:
                out.append(self.true_variance(t))
            else:
                out.append(float(self.noise.seed_variances[t + l - 1]))
        return out

    def distribution_for_step(self, t: int, variance: float | None = None) -> DiscreteDistribution:
        if variance is None:
            variance = self.true_variance(t)
        key = (t, variance)
        if key not in self._step_cache:
            self._step_cache[key] = discretize_density(
                self.trend.value(t), variance, self.noise.family, self._vocab, df=self.noise.df
            )
        return self._step_cache[key]

    def internal_distribution(self, prefix: Sequence[float]) -> DiscreteDistribution:
        n = len(prefix)
        if n < self._min_history:
            raise ValidationError(
                f"prefix length {n} is below the model minimum {self._min_history}"
            )
        return self.distribution_for_step(n + 1)

    @property
    def supports_generation(self) -> bool:
        return True

    def regenerate(self, prefix: Sequence[float], horizon: int, seed: int) -> np.ndarray:
        return generate(self, prefix, horizon, Identity(), seed).values


@dataclass(frozen=True)
class GenerationResult:
    """Recursive forecast plus its per-step white-box trajectories."""

    values: np.ndarray
    tokens: np.ndarray
    internal_distributions: tuple[DiscreteDistribution, ...]
    internal_variances: np.ndarray  # analytic sigma2 of each step's internal law
    fed_variances: np.ndarray  # variance fed back into the recursion
    gammas: np.ndarray  # fed / internal per step (nan when internal is 0)

    def __len__(self) -> int:
        return len(self.values)


def generate(
    model: SyntheticIdealModel,
    history: Sequence[float],
    horizon: int,
    strategy: SamplingStrategy,
    seed: int,
) -> GenerationResult:
    """Recursive forecasting with strategy-modified variance feedback.

    Each step computes the internal distribution from the variance
    recursion, applies the strategy, samples a value (the median token
    for top-k median sampling, a random draw otherwise), and feeds the
    variance of the sampling distribution back into the recursion: the
    true-process variance for real history positions, gamma * sigma2 for
    generated ones, and 0 for the deterministic median outcome.
    """
    n0 = len(history)
    if n0 < model.min_prefix:
        raise ValidationError(
            f"history length {n0} is below the model minimum {model.min_prefix}"
        )
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")

    noise = model.noise
    vocab = model.vocabulary()
    weights = noise.weights
    l = noise.order
    if isinstance(strategy, (Temperature, SymmetricTruncate)):
        feedback_gamma = strategy_gamma(strategy, noise.family, noise.df)
    elif isinstance(strategy, Identity):
        feedback_gamma = 1.0
    else:  # TopKMedian: the sampled outcome is deterministic
        feedback_gamma = 0.0

    state = model.trailing_variances(n0)  # oldest first
    rng = rng_for(seed, "generate")
    values = np.empty(horizon, dtype=float)
    tokens = np.empty(horizon, dtype=int)
    dists: list[DiscreteDistribution] = []
    internal_var = np.empty(horizon, dtype=float)
    fed_var = np.empty(horizon, dtype=float)

    for step in range(horizon):
        t = n0 + 1 + step
        sigma2 = float(sum(w * state[l - 1 - i] for i, w in enumerate(weights)))
        internal = model.distribution_for_step(t, variance=sigma2)
        modified = apply_strategy(internal, strategy)
        if isinstance(strategy, TopKMedian):
            token = median_token(modified)
        else:
            token = int(rng.choice(vocab.size, p=modified.probs))
        values[step] = vocab.value(token)
        tokens[step] = token
        dists.append(internal)
        internal_var[step] = sigma2
        fed_var[step] = feedback_gamma * sigma2
        state.pop(0)
        state.append(fed_var[step])

    with np.errstate(invalid="ignore", divide="ignore"):
        gammas = np.where(internal_var > 0, fed_var / internal_var, np.nan)
    return GenerationResult(
        values=values,
        tokens=tokens,
        internal_distributions=tuple(dists),
        internal_variances=internal_var,
        fed_variances=fed_var,
        gammas=gammas,
    )


class ReplayModel(ForecastModel):
    """Serves stored per-step rows; row t answers prefixes of length t-1.

    Backs both in-memory scoring of freshly generated series and
    dump-file models. When built from a generation run it can delegate
    suffix regeneration to the source model.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        rows: Sequence[DiscreteDistribution],
        observed: Sequence[int],
        name: str = "replay",
        source: SyntheticIdealModel | None = None,
        source_history: np.ndarray | None = None,
        value_space: bool = False,
    ):
        if len(rows) != len(observed):
            raise ValidationError("rows and observed tokens must have equal length")
        if len(rows) < 1:
            raise ValidationError("replay model requires at least one row")
        for row in rows:
            if row.vocab != vocab:
                raise ValidationError("all rows must share the model vocabulary")
        self._vocab = vocab
        self._rows = tuple(rows)
        self._observed = np.asarray(observed, dtype=int)
        self.name = name
        self._source = source
        self._source_history = source_history
        # dump grids may live in a model-internal scaled space, in which
        # case quantizing fresh raw values onto them would be meaningless
        self.value_space = value_space

    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @property
    def min_prefix(self) -> int:
        return 0

    def max_step(self, n: int) -> int:
        return min(n, len(self._rows))

    def internal_distribution(self, prefix: Sequence[float]) -> DiscreteDistribution:
        n = len(prefix)
        if n >= len(self._rows):
            raise ValidationError(
                f"prefix length {n} outside the replay range [0, {len(self._rows) - 1}]"
            )
        return self._rows[n]

    def tokenize(self, values: Sequence[float]) -> np.ndarray:
        if not self.value_space:
            raise UnsupportedDetectorError(
                "replay grid is in the dump's internal space; fresh values cannot be tokenized"
            )
        return super().tokenize(values)

    def observed_tokens(self, values: Sequence[float]) -> np.ndarray:
        if len(values) != len(self._rows):
            raise ValidationError(
                f"series length {len(values)} does not match the {len(self._rows)} stored rows"
            )
        return self._observed.copy()

    @property
    def supports_generation(self) -> bool:
        return self._source is not None

    def regenerate(self, prefix: Sequence[float], horizon: int, seed: int) -> np.ndarray:
        if self._source is None:
            raise UnsupportedDetectorError("replay model has no generation source")
        context = np.asarray(prefix, dtype=float)
        if self._source_history is not None:
            context = np.concatenate([self._source_history, context])
        return generate(self._source, context, horizon, Identity(), seed).values


def replay_from_generation(
    result: GenerationResult,
    model: SyntheticIdealModel,
    history: Sequence[float],
    name: str = "replay",
) -> ReplayModel:
    """Replay model over a generation run's internal rows."""
    return ReplayModel(
        vocab=model.vocabulary(),
        rows=result.internal_distributions,
        observed=result.tokens,
        name=name,
        source=model,
        source_history=np.asarray(history, dtype=float),
        value_space=True,
    )
