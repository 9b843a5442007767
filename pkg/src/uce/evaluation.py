"""Ranking metrics, the synthetic real-vs-generated benchmark, and the
uncertainty-trajectory experiment.

AUROC is the exact Mann-Whitney pair statistic (ties count half),
computed by rank sums; TPR at fixed FPR uses a strict empirical
quantile with no interpolation. The benchmark pairs each candidate with
its white-box model: real candidates against the ideal model of their
process, generated candidates against a replay of the distributions the
generator actually produced.
"""

from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import config as cfgjson
from .detectors import (
    DetectorSettings,
    PerturbConfig,
    UceConfig,
    replace_infinite_sentinels,
    score_series,
)
from .errors import UnsupportedDetectorError, ValidationError
from .forecaster import (
    ForecastModel,
    SamplingStrategy,
    SyntheticIdealModel,
    Temperature,
    generate,
    replay_from_generation,
)
from .process import NoiseSpec, TrendSpec, sample_series
from .seeding import rng_for
from .series_io import SeriesRecord
from .vocab import (
    Vocabulary,
    default_radius,
    entropy,
    local_variance,
    max_prob,
    neighborhood_around_mean,
)

# ---------------------------------------------------------------------------
# Metrics


@dataclass(frozen=True)
class LabeledScores:
    """Scores of generated (positive) and real (negative) candidates."""

    positives: tuple[float, ...]
    negatives: tuple[float, ...]

    def __post_init__(self):
        if len(self.positives) < 1 or len(self.negatives) < 1:
            raise ValidationError("both score lists must be nonempty")


def auroc(s: LabeledScores) -> float:
    """Exact pair statistic: P(pos > neg) + 0.5 P(pos = neg)."""
    pos = np.asarray(s.positives, dtype=float)
    neg = np.asarray(s.negatives, dtype=float)
    ranks = rankdata(np.concatenate([pos, neg]))
    rank_sum = float(np.sum(ranks[: len(pos)]))
    u = rank_sum - len(pos) * (len(pos) + 1) / 2.0
    return u / (len(pos) * len(neg))


def tpr_at_fpr(s: LabeledScores, fpr: float = 0.01) -> float:
    """TPR at the smallest threshold whose FPR does not exceed `fpr`.

    The threshold is chosen among the observed scores (strict quantile,
    no interpolation); if no score qualifies the TPR is 0.
    """
    if not 0 <= fpr < 1:
        raise ValidationError(f"fpr must be in [0, 1), got {fpr}")
    pos = np.asarray(s.positives, dtype=float)
    neg = np.asarray(s.negatives, dtype=float)
    allowed = math.floor(fpr * len(neg))
    for tau in np.unique(np.concatenate([pos, neg])):
        if np.count_nonzero(neg >= tau) <= allowed:
            return float(np.count_nonzero(pos >= tau)) / len(pos)
    return 0.0


# ---------------------------------------------------------------------------
# Benchmark


@dataclass(frozen=True)
class BenchmarkConfig:
    """Synthetic end-to-end benchmark configuration.

    Per-candidate trends cycle through `trends`, with deterministic
    per-sample jitter (phase, amplitude, slope, offset) so the
    populations are families of processes rather than one fixed curve.
    """

    trends: tuple[TrendSpec, ...]
    noise: NoiseSpec
    strategy: SamplingStrategy = field(default_factory=lambda: Temperature(0.7))
    n_real: int = 200
    n_gen: int = 200
    series_length: int = 64
    history_length: int = 32
    vocab: Vocabulary = field(default_factory=Vocabulary.from_span)
    detectors: tuple[str, ...] = (
        "uce_entropy",
        "uce_max_prob",
        "uce_variance",
        "log_likelihood",
        "rank",
        "log_rank",
        "lrr",
        "fourier_gpt",
    )
    min_history: int = 1
    uce: UceConfig = field(default_factory=UceConfig)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    dna_truncation: float = 0.5
    dna_regenerations: int = 10
    fpr: float = 0.01
    jitter: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not self.trends:
            raise ValidationError("at least one trend spec is required")
        if self.n_real < 1 or self.n_gen < 1:
            raise ValidationError("n_real and n_gen must be >= 1")
        if self.series_length < 2:
            raise ValidationError("series_length must be >= 2")
        if self.history_length < max(self.min_history, self.noise.order):
            raise ValidationError(
                "history_length must cover the model minimum history and noise order"
            )

    def to_dict(self) -> dict:
        return {
            "trends": [cfgjson.trend_to_dict(t) for t in self.trends],
            "noise": cfgjson.noise_to_dict(self.noise),
            "strategy": cfgjson.strategy_to_dict(self.strategy),
            "n_real": self.n_real,
            "n_gen": self.n_gen,
            "series_length": self.series_length,
            "history_length": self.history_length,
            "vocab": cfgjson.vocab_to_dict(self.vocab),
            "detectors": list(self.detectors),
            "min_history": self.min_history,
            "uce": dataclasses.asdict(self.uce),
            "perturb": dataclasses.asdict(self.perturb),
            "dna_truncation": self.dna_truncation,
            "dna_regenerations": self.dna_regenerations,
            "fpr": self.fpr,
            "jitter": self.jitter,
            "jobs": self.jobs,
        }


@dataclass(frozen=True)
class EvalReport:
    """Per-detector ranking metrics plus the exact run configuration."""

    detectors: dict
    config: dict
    seed: int

    def to_dict(self) -> dict:
        return {"detectors": self.detectors, "config": self.config, "seed": self.seed}


def vary_trend(trend: TrendSpec, rng: np.random.Generator) -> TrendSpec:
    """Deterministic per-sample jitter keeping the trend family."""
    if trend.kind == "constant":
        return dataclasses.replace(trend, offset=trend.offset + rng.uniform(-1.0, 1.0))
    if trend.kind == "linear":
        return dataclasses.replace(
            trend,
            offset=trend.offset + rng.uniform(-1.0, 1.0),
            slope=trend.slope * rng.uniform(0.7, 1.3),
        )
    if trend.kind == "sine":
        return dataclasses.replace(
            trend,
            phase=trend.phase + rng.uniform(0.0, 2.0 * math.pi),
            amplitude=trend.amplitude * rng.uniform(0.7, 1.3),
        )
    if trend.kind == "sum_of_sines":
        components = tuple(
            (a * rng.uniform(0.7, 1.3), p, ph + rng.uniform(0.0, 2.0 * math.pi))
            for a, p, ph in trend.components
        )
        return dataclasses.replace(trend, components=components)
    shift = rng.uniform(-1.0, 1.0)
    return dataclasses.replace(
        trend, points=tuple((t, v + shift) for t, v in trend.points)
    )


@dataclass(frozen=True)
class Candidate:
    record: SeriesRecord
    model: ForecastModel
    observer: ForecastModel | None = None


def _observer_noise(noise: NoiseSpec) -> NoiseSpec:
    """Observer uses the same family with one extra recursion lag."""
    l = noise.order
    weights = tuple([1.0 / (l + 1)] * (l + 1))
    seeds = (noise.seed_variances[0],) + tuple(noise.seed_variances)
    return NoiseSpec(family=noise.family, weights=weights, seed_variances=seeds, df=noise.df)


def _make_candidate(cfg: BenchmarkConfig, seed: int, label: str, index: int) -> Candidate:
    """One candidate with its white-box scoring model.

    Real candidate i is a fresh realization of its (jittered) process;
    its scoring model is the ideal model of that process. Generated
    candidate j is a recursive forecast continuing a sampled history;
    its scoring model replays the generator's internal rows.
    """
    base = cfg.trends[index % len(cfg.trends)]
    trend = vary_trend(base, rng_for(seed, f"trend-{label}", index)) if cfg.jitter else base
    model = SyntheticIdealModel(trend, cfg.noise, cfg.vocab, min_history=cfg.min_history)
    observer = (
        SyntheticIdealModel(trend, _observer_noise(cfg.noise), cfg.vocab, cfg.min_history)
        if "binocular" in cfg.detectors
        else None
    )
    if label == "real":
        sample = sample_series(
            trend,
            cfg.noise,
            cfg.series_length,
            seed=int(rng_for(seed, "real", index).integers(2**32)),
            series_id=f"real-{index:04d}",
        )
        record = SeriesRecord(series_id=sample.series_id, label="real", values=sample.values)
        return Candidate(record=record, model=model, observer=observer)
    history = sample_series(
        trend,
        cfg.noise,
        cfg.history_length,
        seed=int(rng_for(seed, "gen-history", index).integers(2**32)),
        series_id=f"gen-{index:04d}-history",
    ).values
    result = generate(
        model,
        history,
        cfg.series_length,
        cfg.strategy,
        seed=int(rng_for(seed, "gen", index).integers(2**32)),
    )
    replay = replay_from_generation(result, model, history, name=f"gen-{index:04d}-replay")
    record = SeriesRecord(series_id=f"gen-{index:04d}", label="generated", values=result.values)
    return Candidate(record=record, model=replay, observer=observer)


def iter_candidates(cfg: BenchmarkConfig, seed: int):
    for label, count in (("real", cfg.n_real), ("generated", cfg.n_gen)):
        for index in range(count):
            yield _make_candidate(cfg, seed, label, index)


def _benchmark_settings(cfg: BenchmarkConfig) -> DetectorSettings:
    return DetectorSettings(
        uce=cfg.uce,
        perturb=cfg.perturb,
        dna_truncation=cfg.dna_truncation,
        dna_regenerations=cfg.dna_regenerations,
    )


def score_candidate(
    cand: Candidate, detectors: tuple[str, ...], settings: DetectorSettings, seed: int
) -> list[dict]:
    """All detector rows for one candidate; unsupported pairs become rows too."""
    if cand.observer is not None:
        settings = dataclasses.replace(settings, observer=cand.observer)
    rows = []
    for detector in detectors:
        row = {
            "series_id": cand.record.series_id,
            "label": cand.record.label,
            "detector": detector,
            "score": None,
            "status": "ok",
        }
        try:
            row["score"] = score_series(
                detector, cand.model, cand.record.values, settings, seed,
                cand.record.series_id,
            ).score
        except UnsupportedDetectorError as exc:
            row["status"] = f"unsupported: {exc}"
        rows.append(row)
    return rows


def apply_batch_sentinels(rows: list[dict], detectors: tuple[str, ...]) -> None:
    """Replace flagged infinite scores with batch extremes, per detector column."""
    for detector in detectors:
        idx = [
            i for i, r in enumerate(rows) if r["detector"] == detector and r["score"] is not None
        ]
        fixed = replace_infinite_sentinels([rows[i]["score"] for i in idx])
        for i, value in zip(idx, fixed):
            rows[i]["score"] = value


def score_candidates(
    candidates, cfg: BenchmarkConfig, seed: int
) -> list[dict]:
    """Score (candidate x detector) pairs; order-independent by design.

    Candidates are consumed lazily in chunks so a large benchmark never
    holds more than a chunk of models in memory.
    """
    settings = _benchmark_settings(cfg)
    rows: list[dict] = []
    candidates = iter(candidates)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            while True:
                chunk = list(itertools.islice(candidates, 4 * cfg.jobs))
                if not chunk:
                    break
                for group in pool.map(
                    lambda c: score_candidate(c, cfg.detectors, settings, seed), chunk
                ):
                    rows.extend(group)
    else:
        for cand in candidates:
            rows.extend(score_candidate(cand, cfg.detectors, settings, seed))
    apply_batch_sentinels(rows, cfg.detectors)
    return rows


def metrics_from_rows(rows: list[dict], fpr: float) -> dict:
    """Per-detector AUROC/TPR from score rows; unsupported pairs are recorded."""
    out: dict[str, dict] = {}
    detectors = sorted({r["detector"] for r in rows})
    for detector in detectors:
        sub = [r for r in rows if r["detector"] == detector]
        pos = [r["score"] for r in sub if r["label"] == "generated" and r["score"] is not None]
        neg = [r["score"] for r in sub if r["label"] == "real" and r["score"] is not None]
        unsupported = sum(1 for r in sub if r["status"] != "ok")
        if not pos or not neg:
            out[detector] = {"status": "unsupported", "n_pos": len(pos), "n_neg": len(neg)}
            continue
        scores = LabeledScores(positives=tuple(pos), negatives=tuple(neg))
        entry = {
            "auroc": auroc(scores),
            "tpr_at_fpr": tpr_at_fpr(scores, fpr),
            "fpr": fpr,
            "n_pos": len(pos),
            "n_neg": len(neg),
        }
        if unsupported:
            entry["n_unsupported"] = unsupported
        out[detector] = entry
    return out


def run_benchmark(cfg: BenchmarkConfig, seed: int) -> tuple[EvalReport, list[dict]]:
    rows = score_candidates(iter_candidates(cfg, seed), cfg, seed)
    report = EvalReport(
        detectors=metrics_from_rows(rows, cfg.fpr), config=cfg.to_dict(), seed=seed
    )
    return report, rows


# ---------------------------------------------------------------------------
# Trajectory experiment


@dataclass(frozen=True)
class TrajectoryConfig:
    """Per-step uncertainty trajectories of real vs generated populations."""

    trend: TrendSpec
    noise: NoiseSpec
    strategy: SamplingStrategy
    horizon: int = 256
    n_runs: int = 16
    history_length: int = 32
    vocab: Vocabulary = field(default_factory=Vocabulary.from_span)
    radius: int = 50
    min_history: int = 1
    jitter: bool = True

    def __post_init__(self):
        if not 2 <= self.horizon <= 1024:
            raise ValidationError(f"horizon must be in [2, 1024], got {self.horizon}")
        if self.n_runs < 1:
            raise ValidationError("n_runs must be >= 1")

    def to_dict(self) -> dict:
        return {
            "trend": cfgjson.trend_to_dict(self.trend),
            "noise": cfgjson.noise_to_dict(self.noise),
            "strategy": cfgjson.strategy_to_dict(self.strategy),
            "horizon": self.horizon,
            "n_runs": self.n_runs,
            "history_length": self.history_length,
            "vocab": cfgjson.vocab_to_dict(self.vocab),
            "radius": self.radius,
            "min_history": self.min_history,
            "jitter": self.jitter,
        }


# entropy / max_prob / variance are the windowed uncertainty metrics;
# variance_full is the analytic variance of the internal law itself,
# the quantity the contraction statement is about.
METRIC_NAMES = ("entropy", "max_prob", "variance", "variance_full")


@dataclass(frozen=True)
class TrajectoryReport:
    """mean +- std per step for each metric and population."""

    horizon: int
    strategy: str
    noise_family: str
    mean: dict  # (population, metric) -> np.ndarray over steps
    std: dict
    config: dict
    seed: int

    def rows(self) -> list[dict]:
        out = []
        for step in range(self.horizon):
            for population in ("real", "generated"):
                for metric in METRIC_NAMES:
                    out.append(
                        {
                            "step": step + 1,
                            "population": population,
                            "metric": metric,
                            "mean": float(self.mean[(population, metric)][step]),
                            "std": float(self.std[(population, metric)][step]),
                        }
                    )
        return out


def _window_metrics(dist, radius: int) -> tuple[float, float, float]:
    window = neighborhood_around_mean(dist, radius)
    return (
        entropy(dist, window),
        max_prob(dist, window),
        local_variance(dist, window),
    )


def hypothesis_trajectories(cfg: TrajectoryConfig, seed: int) -> TrajectoryReport:
    """Record windowed uncertainty per step for both populations.

    Generated runs log the internal distributions produced during
    recursive generation; real runs log the model's distributions
    conditioned on growing real prefixes of the same process.
    """
    radius = default_radius(cfg.vocab.size, cfg.radius)
    data = {
        (population, metric): np.empty((cfg.n_runs, cfg.horizon))
        for population in ("real", "generated")
        for metric in METRIC_NAMES
    }
    for run in range(cfg.n_runs):
        rng = rng_for(seed, "trajectory", run)
        trend = vary_trend(cfg.trend, rng) if cfg.jitter else cfg.trend
        noise = cfg.noise
        if cfg.jitter:
            scale = float(rng.uniform(0.5, 2.0))
            noise = dataclasses.replace(
                noise, seed_variances=tuple(v * scale for v in noise.seed_variances)
            )
        model = SyntheticIdealModel(trend, noise, cfg.vocab, min_history=cfg.min_history)
        history = sample_series(
            trend,
            noise,
            cfg.history_length,
            seed=int(rng.integers(2**32)),
            series_id=f"traj-{run}",
        ).values
        result = generate(
            model, history, cfg.horizon, cfg.strategy, seed=int(rng.integers(2**32))
        )
        for step, dist in enumerate(result.internal_distributions):
            e, m, v = _window_metrics(dist, radius)
            data[("generated", "entropy")][run, step] = e
            data[("generated", "max_prob")][run, step] = m
            data[("generated", "variance")][run, step] = v
            data[("generated", "variance_full")][run, step] = result.internal_variances[step]
        for step in range(cfg.horizon):
            t = cfg.history_length + 1 + step
            dist = model.distribution_for_step(t)
            e, m, v = _window_metrics(dist, radius)
            data[("real", "entropy")][run, step] = e
            data[("real", "max_prob")][run, step] = m
            data[("real", "variance")][run, step] = v
            data[("real", "variance_full")][run, step] = model.true_variance(t)
    return TrajectoryReport(
        horizon=cfg.horizon,
        strategy=cfgjson.strategy_to_dict(cfg.strategy)["kind"],
        noise_family=cfg.noise.family,
        mean={k: v.mean(axis=0) for k, v in data.items()},
        std={k: v.std(axis=0) for k, v in data.items()},
        config=cfg.to_dict(),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# File outputs


def write_scores_csv(rows: list[dict], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "label", "detector", "score", "status"])
        for row in rows:
            score = "" if row["score"] is None else repr(float(row["score"]))
            writer.writerow([row["series_id"], row["label"], row["detector"], score, row["status"]])


def write_trajectories_csv(report: TrajectoryReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "population", "metric", "mean", "std"])
        for row in report.rows():
            writer.writerow(
                [row["step"], row["population"], row["metric"], repr(row["mean"]), repr(row["std"])]
            )


def write_report_json(report: EvalReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sidecar(config: dict, seed: int, path: str | os.PathLike) -> None:
    """Provenance file: the full config plus the master seed."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"config": config, "seed": seed}, fh, indent=2, sort_keys=True)
        fh.write("\n")
