"""Detection scores for candidate series under a white-box forecast model.

Every detector returns an oriented scalar: higher always means "more
likely model-generated", so AUROC is comparable across detectors. The
per-detector sign conventions are noted on each function.

UCE aggregates an uncertainty metric (entropy, max probability, or local
variance inside a window around the distribution mean) over the internal
distributions at a schedule of prefixes; generated series concentrate
those distributions while real ones do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import squareform, pdist

from .errors import UnsupportedDetectorError, ValidationError
from .forecaster import ForecastModel
from .seeding import rng_for
from .vocab import (
    DiscreteDistribution,
    cross_entropy,
    default_radius,
    entropy,
    local_variance,
    max_prob,
    neighborhood_around_mean,
)

PROB_FLOOR = 1e-300

UCE_VARIANTS = ("entropy", "max_prob", "variance")


@dataclass(frozen=True)
class UceConfig:
    """Schedule and window for the uncertainty-contraction score.

    The prefix schedule starts at t1 = floor(start_fraction * H) and
    advances by `step`; with the defaults and H=64 it scores the 16
    prefixes of lengths 48..63. `radius` is calibrated to a 4096-token
    vocabulary and is rescaled proportionally for other sizes.
    """

    start_fraction: float = 0.75
    step: int = 1
    radius: int = 50
    variant: str = "entropy"

    def __post_init__(self):
        if not 0 <= self.start_fraction < 1:
            raise ValidationError(f"start_fraction must be in [0, 1), got {self.start_fraction}")
        if self.step < 1:
            raise ValidationError(f"step must be >= 1, got {self.step}")
        if self.radius < 1:
            raise ValidationError(f"radius must be >= 1, got {self.radius}")
        if self.variant not in UCE_VARIANTS:
            raise ValidationError(f"variant must be one of {UCE_VARIANTS}, got {self.variant!r}")

    def schedule(self, series_length: int) -> range:
        t1 = math.floor(self.start_fraction * series_length)
        return range(max(t1, 1), series_length, self.step)


@dataclass(frozen=True)
class PerturbConfig:
    """Local-neighborhood value substitution used by the perturbation detectors."""

    ratio: float = 0.3
    count: int = 10
    window: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.ratio <= 1:
            raise ValidationError(f"ratio must be in (0, 1], got {self.ratio}")
        if self.count < 1:
            raise ValidationError(f"count must be >= 1, got {self.count}")
        if self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")


@dataclass(frozen=True)
class DetectorScore:
    """Oriented score (higher means more likely generated) plus provenance."""

    detector: str
    score: float
    components: tuple[float, ...] | None = None
    flag: str | None = None

    def __post_init__(self):
        if math.isnan(self.score):
            raise ValidationError(f"{self.detector}: score must not be NaN")


# ---------------------------------------------------------------------------
# Shared helpers


def _scoreable_steps(model: ForecastModel, n: int) -> range:
    steps = model.scoreable_steps(n)
    if len(steps) == 0:
        raise ValidationError(
            f"series of length {n} leaves no scoreable step for this model"
        )
    return steps


def _row(model: ForecastModel, values: Sequence[float], t: int) -> DiscreteDistribution:
    return model.internal_distribution(values[: t - 1])


def _loglik_terms(
    model: ForecastModel, values: np.ndarray, tokens: np.ndarray
) -> np.ndarray:
    steps = _scoreable_steps(model, len(values))
    out = np.empty(len(steps), dtype=float)
    for i, t in enumerate(steps):
        p = _row(model, values, t).probs[tokens[t - 1]]
        out[i] = math.log(max(p, PROB_FLOOR))
    return out


def _rank_of(probs: np.ndarray, token: int) -> int:
    """1-based descending-probability rank; ties go to the lower token index."""
    p = probs[token]
    greater = int(np.count_nonzero(probs > p))
    ties_before = int(np.count_nonzero(probs[:token] == p))
    return greater + ties_before + 1


def _rank_terms(model: ForecastModel, values: np.ndarray, tokens: np.ndarray) -> np.ndarray:
    steps = _scoreable_steps(model, len(values))
    out = np.empty(len(steps), dtype=float)
    for i, t in enumerate(steps):
        out[i] = _rank_of(_row(model, values, t).probs, tokens[t - 1])
    return out


# ---------------------------------------------------------------------------
# UCE


def uce(model: ForecastModel, series: Sequence[float], cfg: UceConfig) -> DetectorScore:
    """Mean windowed uncertainty over the prefix schedule, sign-adjusted.

    Entropy and variance variants negate the mean (lower uncertainty
    means generated); the max-probability variant keeps its sign.
    """
    values = np.asarray(series, dtype=float)
    schedule = cfg.schedule(len(values))
    if len(schedule) < 1:
        raise ValidationError(
            f"series length {len(values)} yields an empty prefix schedule"
        )
    if schedule[0] < model.min_prefix:
        raise ValidationError(
            f"schedule start {schedule[0]} is below the model minimum prefix {model.min_prefix}"
        )
    radius = default_radius(model.vocabulary().size, cfg.radius)
    metrics = np.empty(len(schedule), dtype=float)
    for i, t in enumerate(schedule):
        dist = model.internal_distribution(values[:t])
        window = neighborhood_around_mean(dist, radius)
        if cfg.variant == "entropy":
            metrics[i] = entropy(dist, window)
        elif cfg.variant == "max_prob":
            metrics[i] = max_prob(dist, window)
        else:
            metrics[i] = local_variance(dist, window)
    raw = float(np.mean(metrics))
    score = raw if cfg.variant == "max_prob" else -raw
    return DetectorScore(
        detector=f"uce_{cfg.variant}", score=score, components=tuple(metrics)
    )


# ---------------------------------------------------------------------------
# Traditional metrics


def log_likelihood(model: ForecastModel, series: Sequence[float]) -> DetectorScore:
    """Mean ln p(observed token | prefix); generated series score higher."""
    values = np.asarray(series, dtype=float)
    terms = _loglik_terms(model, values, model.observed_tokens(values))
    return DetectorScore(
        detector="log_likelihood", score=float(np.mean(terms)), components=tuple(terms)
    )


def rank_score(model: ForecastModel, series: Sequence[float]) -> DetectorScore:
    """Negated mean rank of the observed token (rank 1 = most probable)."""
    values = np.asarray(series, dtype=float)
    ranks = _rank_terms(model, values, model.observed_tokens(values))
    return DetectorScore(
        detector="rank", score=float(-np.mean(ranks)), components=tuple(ranks)
    )


def log_rank_score(model: ForecastModel, series: Sequence[float]) -> DetectorScore:
    """Negated mean ln rank of the observed token."""
    values = np.asarray(series, dtype=float)
    ranks = _rank_terms(model, values, model.observed_tokens(values))
    log_ranks = np.log(ranks)
    return DetectorScore(
        detector="log_rank", score=float(-np.mean(log_ranks)), components=tuple(log_ranks)
    )


def lrr(model: ForecastModel, series: Sequence[float]) -> DetectorScore:
    """Log-likelihood over log-rank ratio: -sum ln p / sum ln rank.

    Rank-1 steps contribute nothing to the denominator; an all-rank-1
    series has a zero denominator and is returned as a flagged infinite
    sentinel that batch scorers replace with (max finite LRR + 1).
    """
    values = np.asarray(series, dtype=float)
    tokens = model.observed_tokens(values)
    num = -float(np.sum(_loglik_terms(model, values, tokens)))
    den = float(np.sum(np.log(_rank_terms(model, values, tokens))))
    if den == 0.0:
        return DetectorScore(detector="lrr", score=math.inf, flag="zero_log_rank")
    return DetectorScore(detector="lrr", score=num / den)


# ---------------------------------------------------------------------------
# Perturbation-based detectors


def perturb(series: Sequence[float], cfg: PerturbConfig) -> list[np.ndarray]:
    """Independent perturbed copies of the series.

    Each copy substitutes ceil(ratio * n) distinct positions with a value
    drawn uniformly from the neighbouring positions within `window`
    steps, excluding the current value. Deterministic per seed.
    """
    values = np.asarray(series, dtype=float)
    n = len(values)
    if n < 2:
        raise ValidationError(f"series must have length >= 2, got {n}")
    n_positions = math.ceil(cfg.ratio * n)
    out = []
    for k in range(cfg.count):
        rng = rng_for(cfg.seed, "perturb", k)
        positions = rng.choice(n, size=n_positions, replace=False)
        perturbed = values.copy()
        for t in sorted(int(p) for p in positions):
            lo = max(0, t - cfg.window)
            hi = min(n - 1, t + cfg.window)
            donors = [j for j in range(lo, hi + 1) if values[j] != values[t]]
            if donors:
                perturbed[t] = values[donors[int(rng.integers(len(donors)))]]
        out.append(perturbed)
    return out


def detect_gpt(
    model: ForecastModel, series: Sequence[float], cfg: PerturbConfig
) -> DetectorScore:
    """Curvature statistic: (L(x) - mean_k L(x_k)) / std_k L(x_k).

    L is the total log-likelihood; generated series sit near local
    maxima of the likelihood landscape, so perturbing them lowers L and
    the statistic is positive.
    """
    if cfg.count < 2:
        raise ValidationError("detect_gpt requires at least 2 perturbations")
    values = np.asarray(series, dtype=float)
    original = float(np.sum(_loglik_terms(model, values, model.observed_tokens(values))))
    perturbed_l = np.array(
        [
            float(np.sum(_loglik_terms(model, p, model.tokenize(p))))
            for p in perturb(values, cfg)
        ]
    )
    std = max(float(np.std(perturbed_l, ddof=1)), 1e-8)
    return DetectorScore(
        detector="detect_gpt",
        score=(original - float(np.mean(perturbed_l))) / std,
        components=tuple(perturbed_l),
    )


def fast_detect_gpt(
    model: ForecastModel, series: Sequence[float], cfg: PerturbConfig
) -> DetectorScore:
    """detect_gpt restricted to the perturbed positions.

    The unperturbed positions' log-likelihood terms are common to the
    original and every perturbation, so only the per-perturbation
    deltas over the touched positions are evaluated.
    """
    if cfg.count < 2:
        raise ValidationError("fast_detect_gpt requires at least 2 perturbations")
    values = np.asarray(series, dtype=float)
    tokens = model.observed_tokens(values)
    steps = set(_scoreable_steps(model, len(values)))
    deltas = []
    for perturbed in perturb(values, cfg):
        p_tokens = model.tokenize(perturbed)
        delta = 0.0
        for idx in np.nonzero(p_tokens != tokens)[0]:
            t = int(idx) + 1
            if t not in steps:
                continue
            probs = _row(model, values, t).probs
            delta += math.log(max(probs[p_tokens[idx]], PROB_FLOOR)) - math.log(
                max(probs[tokens[idx]], PROB_FLOOR)
            )
        deltas.append(delta)
    deltas = np.asarray(deltas)
    std = max(float(np.std(deltas, ddof=1)), 1e-8)
    return DetectorScore(
        detector="fast_detect_gpt", score=-float(np.mean(deltas)) / std, components=tuple(deltas)
    )


def npr(model: ForecastModel, series: Sequence[float], cfg: PerturbConfig) -> DetectorScore:
    """Normalized perturbed log-rank: mean_k sum ln rank(x_k) / sum ln rank(x).

    Same zero-denominator sentinel convention as lrr.
    """
    values = np.asarray(series, dtype=float)
    den = float(np.sum(np.log(_rank_terms(model, values, model.observed_tokens(values)))))
    perturbed_sums = np.array(
        [
            float(np.sum(np.log(_rank_terms(model, p, model.tokenize(p)))))
            for p in perturb(values, cfg)
        ]
    )
    if den == 0.0:
        return DetectorScore(detector="npr", score=math.inf, flag="zero_log_rank")
    return DetectorScore(
        detector="npr", score=float(np.mean(perturbed_sums)) / den, components=tuple(perturbed_sums)
    )


# ---------------------------------------------------------------------------
# Regeneration: DNA-style white-box score


def dna_gpt_wscore(
    model: ForecastModel,
    series: Sequence[float],
    truncation: float = 0.5,
    regenerations: int = 10,
    seed: int = 0,
) -> DetectorScore:
    """Log-likelihood gap between the observed suffix and regenerated ones.

    Keeps the first floor((1 - truncation) * n) values as the prefix,
    regenerates the suffix `regenerations` times with identity sampling,
    and scores mean ll(observed suffix) - mean over regenerations.
    Requires a generation-capable model.
    """
    if not 0 < truncation <= 1:
        raise ValidationError(f"truncation must be in (0, 1], got {truncation}")
    if regenerations < 1:
        raise ValidationError(f"regenerations must be >= 1, got {regenerations}")
    if not model.supports_generation:
        raise UnsupportedDetectorError("dna_gpt requires a generation-capable model")
    values = np.asarray(series, dtype=float)
    n = len(values)
    keep = math.floor((1.0 - truncation) * n)
    if keep < max(model.min_prefix, 1) or keep >= n:
        raise ValidationError(
            f"truncation {truncation} leaves an unusable prefix of length {keep}"
        )

    def suffix_mean_ll(candidate: np.ndarray, tokens: np.ndarray) -> float:
        terms = []
        for t in range(keep + 1, model.max_step(n) + 1):
            p = _row(model, candidate, t).probs[tokens[t - 1]]
            terms.append(math.log(max(p, PROB_FLOOR)))
        return float(np.mean(terms))

    observed = suffix_mean_ll(values, model.observed_tokens(values))
    regen_lls = []
    for k in range(regenerations):
        suffix = model.regenerate(values[:keep], n - keep, rng_for(seed, "dna", k).integers(2**32))
        candidate = np.concatenate([values[:keep], suffix])
        regen_lls.append(suffix_mean_ll(candidate, model.tokenize(candidate)))
    return DetectorScore(
        detector="dna_gpt",
        score=observed - float(np.mean(regen_lls)),
        components=tuple(regen_lls),
    )


# ---------------------------------------------------------------------------
# Spectral score


def spectral_low_frequency_score(terms: np.ndarray) -> DetectorScore:
    """Sum of DFT magnitudes over bins 1..10 of the z-scored sequence.

    Bin 0 is excluded; sequences with fewer than 22 entries use every
    non-redundant bin and are flagged, and a constant sequence scores 0.
    """
    terms = np.asarray(terms, dtype=float)
    n = len(terms)
    std = float(np.std(terms))
    if std == 0.0:
        return DetectorScore(detector="fourier_gpt", score=0.0, flag="constant_likelihood")
    z = (terms - float(np.mean(terms))) / std
    spectrum = np.abs(np.fft.fft(z))
    k_max = min(10, n // 2)
    if k_max < 1:
        return DetectorScore(detector="fourier_gpt", score=0.0, flag="short_series")
    magnitudes = spectrum[1 : k_max + 1]
    return DetectorScore(
        detector="fourier_gpt",
        score=float(np.sum(magnitudes)),
        components=tuple(magnitudes),
        flag="short_series" if n < 22 else None,
    )


def fourier_gpt(model: ForecastModel, series: Sequence[float]) -> DetectorScore:
    """Low-frequency power of the normalized per-step log-likelihoods.

    Generated series carry more low-frequency structure in their
    likelihood profile, so the summed magnitude is oriented positive.
    """
    values = np.asarray(series, dtype=float)
    terms = _loglik_terms(model, values, model.observed_tokens(values))
    return spectral_low_frequency_score(terms)


# ---------------------------------------------------------------------------
# Two-model score


def binocular(
    observer: ForecastModel, performer: ForecastModel, series: Sequence[float]
) -> DetectorScore:
    """Negated ratio of performer log-perplexity to observer cross-entropy.

    The cross-entropy of the performer's rows under the observer's rows
    absorbs prefix-induced uncertainty; generated series have a low
    ratio, so the returned score is the negated ratio.
    """
    if observer.vocabulary() != performer.vocabulary():
        raise ValidationError("observer and performer must share a vocabulary")
    values = np.asarray(series, dtype=float)
    steps = [
        t
        for t in _scoreable_steps(performer, len(values))
        if t in _scoreable_steps(observer, len(values))
    ]
    if not steps:
        raise ValidationError("no step is scoreable by both models")
    tokens = performer.observed_tokens(values)
    nll_terms = []
    xent_terms = []
    for t in steps:
        perf_row = _row(performer, values, t)
        obs_row = _row(observer, values, t)
        nll_terms.append(-math.log(max(perf_row.probs[tokens[t - 1]], PROB_FLOOR)))
        xent_terms.append(cross_entropy(perf_row, obs_row))
    log_ppl = float(np.mean(nll_terms))
    xent = float(np.mean(xent_terms))
    if xent < 1e-12:
        if log_ppl < 1e-12:
            return DetectorScore(detector="binocular", score=-1.0, flag="degenerate_rows")
        return DetectorScore(detector="binocular", score=-math.inf, flag="zero_cross_entropy")
    return DetectorScore(detector="binocular", score=-(log_ppl / xent))


# ---------------------------------------------------------------------------
# Intrinsic dimension (persistent-homology estimate)


def mst_total_length(points: np.ndarray, alpha: float = 1.0) -> float:
    """Total Euclidean MST edge length, each edge raised to `alpha`."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValidationError("need a 2-d array of at least two points")
    dist = squareform(pdist(pts))
    tree = minimum_spanning_tree(dist)
    return float(np.sum(tree.data**alpha))


def intrinsic_dimension_estimate(
    points: np.ndarray,
    alpha: float = 1.0,
    n_scales: int = 8,
    subsamples: int = 7,
    repeats: int = 3,
    seed: int = 0,
) -> float:
    """Dimension from the growth rate of MST length with sample size.

    For n_scales+1 sample sizes equally spaced between max(2, N/8) and
    N, draws `subsamples` random subsets, keeps the median MST length
    per size, fits the slope of log(length) against log(size) by least
    squares, and returns the average of 1 / (1 - slope) over `repeats`
    runs. A cloud of identical points has dimension 0 by convention.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    n_points = len(pts)
    if n_points < 2 * (n_scales + 1):
        raise ValidationError(
            f"need at least {2 * (n_scales + 1)} points, got {n_points}"
        )
    if np.allclose(pts, pts[0]):
        return 0.0
    sizes = np.unique(
        np.round(np.linspace(max(2.0, n_points / 8.0), n_points, n_scales + 1)).astype(int)
    )
    estimates = []
    for r in range(repeats):
        rng = rng_for(seed, "phd", r)
        medians = np.empty(len(sizes), dtype=float)
        for i, size in enumerate(sizes):
            lengths = []
            for _ in range(subsamples):
                subset = pts[rng.choice(n_points, size=int(size), replace=False)]
                lengths.append(mst_total_length(subset, alpha))
            medians[i] = float(np.median(lengths))
        if np.any(medians <= 0):
            return 0.0
        slope = float(np.polyfit(np.log(sizes), np.log(medians), 1)[0])
        estimates.append(1.0 / (1.0 - slope))
    return float(np.mean(estimates))


def intrinsic_dimension(
    model: ForecastModel,
    series: Sequence[float],
    alpha: float = 1.0,
    n_scales: int = 8,
    subsamples: int = 7,
    repeats: int = 3,
    seed: int = 0,
    points: np.ndarray | None = None,
) -> DetectorScore:
    """Dimension of the per-prefix internal-distribution point cloud.

    Real series trace a geometrically richer cloud than generated ones,
    so the score is the negated dimension. External embeddings can be
    passed through `points` to replace the default cloud.
    """
    values = np.asarray(series, dtype=float)
    if points is None:
        rows = [
            _row(model, values, t).probs for t in _scoreable_steps(model, len(values))
        ]
        points = np.asarray(rows)
    dim = intrinsic_dimension_estimate(
        points, alpha=alpha, n_scales=n_scales, subsamples=subsamples, repeats=repeats, seed=seed
    )
    return DetectorScore(detector="intrinsic_dimension", score=-dim)


# ---------------------------------------------------------------------------
# Dispatch and batch utilities

TRADITIONAL_DETECTORS = ("log_likelihood", "rank", "log_rank")
ALL_DETECTORS = (
    "uce_entropy",
    "uce_max_prob",
    "uce_variance",
    "log_likelihood",
    "rank",
    "log_rank",
    "lrr",
    "detect_gpt",
    "fast_detect_gpt",
    "npr",
    "dna_gpt",
    "fourier_gpt",
    "binocular",
    "intrinsic_dimension",
)


@dataclass(frozen=True)
class DetectorSettings:
    """Shared parameters for a batch of detector runs."""

    uce: UceConfig = field(default_factory=UceConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    dna_truncation: float = 0.5
    dna_regenerations: int = 10
    observer: ForecastModel | None = None


def score_series(
    detector: str,
    model: ForecastModel,
    series: Sequence[float],
    settings: DetectorSettings,
    master_seed: int,
    series_id: str = "",
) -> DetectorScore:
    """Run one detector; stochastic detectors derive their stream from
    (master seed, series id, detector id) so batch order is irrelevant."""
    task_seed = int(rng_for(master_seed, series_id, detector).integers(2**32))
    if detector.startswith("uce_"):
        variant = detector[len("uce_") :]
        return uce(model, series, replace(settings.uce, variant=variant))
    if detector == "log_likelihood":
        return log_likelihood(model, series)
    if detector == "rank":
        return rank_score(model, series)
    if detector == "log_rank":
        return log_rank_score(model, series)
    if detector == "lrr":
        return lrr(model, series)
    if detector == "detect_gpt":
        return detect_gpt(model, series, replace(settings.perturb, seed=task_seed))
    if detector == "fast_detect_gpt":
        return fast_detect_gpt(model, series, replace(settings.perturb, seed=task_seed))
    if detector == "npr":
        return npr(model, series, replace(settings.perturb, seed=task_seed))
    if detector == "dna_gpt":
        return dna_gpt_wscore(
            model,
            series,
            truncation=settings.dna_truncation,
            regenerations=settings.dna_regenerations,
            seed=task_seed,
        )
    if detector == "fourier_gpt":
        return fourier_gpt(model, series)
    if detector == "binocular":
        if settings.observer is None:
            raise UnsupportedDetectorError("binocular requires an observer model")
        return binocular(settings.observer, model, series)
    if detector == "intrinsic_dimension":
        return intrinsic_dimension(model, series, seed=task_seed)
    raise ValidationError(f"unknown detector {detector!r}; expected one of {ALL_DETECTORS}")


def replace_infinite_sentinels(scores: list[float]) -> list[float]:
    """Replace +/-inf sentinels with (max finite + 1) / (min finite - 1).

    Used by batch scorers on the per-detector score column so flagged
    degenerate cases keep their extreme ordering with a finite value.
    """
    finite = [s for s in scores if math.isfinite(s)]
    hi = (max(finite) + 1.0) if finite else 1.0
    lo = (min(finite) - 1.0) if finite else -1.0
    return [hi if s == math.inf else lo if s == -math.inf else s for s in scores]
