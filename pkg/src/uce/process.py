"""Synthetic time-series processes: bounded deterministic trends plus
independent noise whose variances follow a convex linear recursion.

A series decomposes as ``X_t = T_t + n_t`` where the trend ``T_t`` is a
deterministic bounded sequence and the noise ``n_t`` is drawn
independently per step with variance

    sigma2_t = sum_i alpha_i * sigma2_{t-i},    sum_i alpha_i = 1.

Because the weights are a convex combination, the variance sequence
stays inside the envelope of its seed values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .seeding import rng_for

NOISE_FAMILIES = ("gaussian", "laplace", "student_t", "cauchy")

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TrendSpec:
    """Deterministic trend evaluated at integer steps t >= 1.

    Kinds and their parameters:
      constant:         offset
      linear:           offset, slope
      sine:             offset, amplitude, period (steps), phase
      sum_of_sines:     offset, components=[(amplitude, period, phase), ...]
      piecewise_linear: points=[(t, value), ...]; held constant outside
                        the breakpoint range so the trend stays bounded.
    """

    kind: str
    offset: float = 0.0
    slope: float = 0.0
    amplitude: float = 1.0
    period: float = 32.0
    phase: float = 0.0
    components: tuple[tuple[float, float, float], ...] = ()
    points: tuple[tuple[float, float], ...] = ()
    bound: float | None = None

    def __post_init__(self):
        kinds = ("constant", "linear", "sine", "sum_of_sines", "piecewise_linear")
        if self.kind not in kinds:
            raise ValidationError(f"unknown trend kind {self.kind!r}; expected one of {kinds}")
        if self.kind == "sine" and self.period <= 0:
            raise ValidationError("sine period must be positive")
        if self.kind == "sum_of_sines":
            if not self.components:
                raise ValidationError("sum_of_sines requires at least one component")
            for _, period, _ in self.components:
                if period <= 0:
                    raise ValidationError("sum_of_sines periods must be positive")
        if self.kind == "piecewise_linear":
            if len(self.points) < 2:
                raise ValidationError("piecewise_linear requires at least two points")
            ts = [p[0] for p in self.points]
            if sorted(ts) != ts or len(set(ts)) != len(ts):
                raise ValidationError("piecewise_linear breakpoints must be strictly increasing")

    def value(self, t: float) -> float:
        """Trend value at step t; deterministic in (spec, t)."""
        if self.kind == "constant":
            v = self.offset
        elif self.kind == "linear":
            v = self.offset + self.slope * t
        elif self.kind == "sine":
            v = self.offset + self.amplitude * math.sin(2.0 * math.pi * t / self.period + self.phase)
        elif self.kind == "sum_of_sines":
            v = self.offset
            for amplitude, period, phase in self.components:
                v += amplitude * math.sin(2.0 * math.pi * t / period + phase)
        else:  # piecewise_linear, held flat outside the breakpoints
            ts = [p[0] for p in self.points]
            vs = [p[1] for p in self.points]
            v = float(np.interp(t, ts, vs))
        if self.bound is not None and abs(v) > self.bound + 1e-12:
            raise ValidationError(
                f"trend value {v} at t={t} exceeds declared bound {self.bound}"
            )
        return v

    def values(self, start: int, length: int) -> np.ndarray:
        return np.array([self.value(t) for t in range(start, start + length)], dtype=float)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family plus the variance recursion parameters.

    `weights` are the recursion coefficients (convex: nonnegative, sum 1).
    `seed_variances` are sigma2 at steps -l+1 .. 0, oldest first, where
    l = len(weights) = len(seed_variances).

    The Cauchy family has no variance; the recursion value is reused as
    the squared scale so the same machinery drives its trajectories.
    Student-t noise is rescaled so its variance equals sigma2 (df > 2).
    """

    family: str
    weights: tuple[float, ...]
    seed_variances: tuple[float, ...]
    df: float = 5.0

    def __post_init__(self):
        if self.family not in NOISE_FAMILIES:
            raise ValidationError(
                f"unknown noise family {self.family!r}; expected one of {NOISE_FAMILIES}"
            )
        if len(self.weights) == 0:
            raise ValidationError("weights must be nonempty")
        if len(self.weights) != len(self.seed_variances):
            raise ValidationError(
                "weights and seed_variances must have equal length "
                f"(got {len(self.weights)} and {len(self.seed_variances)})"
            )
        if any(w < 0 for w in self.weights):
            raise ValidationError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL} (got {sum(self.weights)!r})"
            )
        if any(v < 0 for v in self.seed_variances):
            raise ValidationError("seed variances must be nonnegative")
        if self.family == "student_t" and self.df <= 2:
            raise ValidationError("student_t requires df > 2 for a finite variance")

    @property
    def order(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class SeriesSample:
    """A realized series with its trend/noise split; values = trend + noise exactly."""

    values: np.ndarray
    trend: np.ndarray
    noise: np.ndarray
    label: str
    seed: int
    series_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValidationError("series length must be >= 1")
        if not (len(self.values) == len(self.trend) == len(self.noise)):
            raise ValidationError("values, trend and noise must share a length")
        if self.label not in ("real", "generated"):
            raise ValidationError(f"label must be 'real' or 'generated', got {self.label!r}")
        if not np.array_equal(self.values, self.trend + self.noise):
            raise ValidationError("values must equal trend + noise exactly")


def variance_sequence(spec: NoiseSpec, horizon: int) -> np.ndarray:
    """Iterate the variance recursion for steps 1..horizon.

    Seeds occupy steps -l+1..0; each new term is the weighted sum of the
    previous l terms. Output entries are all nonnegative.
    """
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    l = spec.order
    window = list(spec.seed_variances)  # oldest first, ends at step 0
    out = np.empty(horizon, dtype=float)
    for t in range(horizon):
        nxt = 0.0
        for i, alpha in enumerate(spec.weights):
            # weight alpha_{i+1} applies to sigma2_{t-(i+1)}
            nxt += alpha * window[l - 1 - i]
        out[t] = nxt
        window.pop(0)
        window.append(nxt)
    return out


def _draw_noise(rng: np.random.Generator, family: str, variances: np.ndarray, df: float) -> np.ndarray:
    """One independent draw per step with the requested per-step variance."""
    n = len(variances)
    if family == "gaussian":
        return rng.standard_normal(n) * np.sqrt(variances)
    if family == "laplace":
        # Laplace(scale b) has variance 2 b^2.
        return rng.laplace(0.0, 1.0, size=n) * np.sqrt(variances / 2.0)
    if family == "student_t":
        # standard_t(df) has variance df / (df - 2)
        scale = np.sqrt(variances * (df - 2.0) / df)
        return rng.standard_t(df, size=n) * scale
    # cauchy: recursion value is the squared scale
    return rng.standard_cauchy(n) * np.sqrt(variances)


def sample_series(
    trend: TrendSpec,
    noise: NoiseSpec,
    length: int,
    seed: int,
    series_id: str = "",
    start: int = 1,
) -> SeriesSample:
    """Sample one real series of the given length starting at step `start`."""
    if length < 1:
        raise ValidationError(f"length must be >= 1, got {length}")
    variances = variance_sequence(noise, start - 1 + length)[start - 1 :]
    rng = rng_for(seed, "series", series_id or "series", start)
    noise_values = _draw_noise(rng, noise.family, variances, noise.df)
    trend_values = trend.values(start, length)
    return SeriesSample(
        values=trend_values + noise_values,
        trend=trend_values,
        noise=noise_values,
        label="real",
        seed=seed,
        series_id=series_id,
    )


_G_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
}


def eva(
    actual: Sequence[float],
    forecast: Sequence[float],
    p: float = 2.0,
    g: str | Callable[[np.ndarray], np.ndarray] = "identity",
) -> float:
    """Generalized l_p forecast error: [ sum_i g(|X_i - Xhat_i|^p) ]^(1/p).

    `g` is a tag ("identity" or "square") or any nonnegative increasing
    callable. With g=identity and p=2 this is the Euclidean error.
    p=inf takes the max of g(|X_i - Xhat_i|), the limit of the l_p form.
    """
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape or a.ndim != 1 or len(a) < 1:
        raise ValidationError(
            f"sequences must be 1-d and of equal length >= 1 (got {a.shape} and {f.shape})"
        )
    if isinstance(g, str):
        if g not in _G_FUNCTIONS:
            raise ValidationError(f"unknown g tag {g!r}; expected one of {tuple(_G_FUNCTIONS)}")
        g_fn = _G_FUNCTIONS[g]
    else:
        g_fn = g
    if not (p >= 1):
        raise ValidationError(f"p must be in [1, inf], got {p}")
    diffs = np.abs(a - f)
    if math.isinf(p):
        return float(np.max(g_fn(diffs)))
    return float(np.sum(g_fn(diffs**p)) ** (1.0 / p))
