import math

import numpy as np
import pytest
from scipy.stats import norm

from uce.errors import UnsupportedDetectorError, ValidationError
from uce.forecaster import (
    Identity,
    ReplayModel,
    SymmetricTruncate,
    SyntheticIdealModel,
    Temperature,
    TopKMedian,
    apply_strategy,
    gamma_of,
    generate,
    median_token,
    replay_from_generation,
    strategy_gamma,
)
from uce.process import NoiseSpec, TrendSpec
from uce.vocab import (
    DiscreteDistribution,
    Vocabulary,
    discretize_density,
    dist_mean,
    dist_variance_full,
    quantize,
)

FINE = Vocabulary(size=3201, delta=0.005, v_min=-8.0)


def truncated_normal_variance(a: float) -> float:
    """Variance of a standard normal truncated to [-a, a] (closed form)."""
    z = 2.0 * norm.cdf(a) - 1.0
    return 1.0 - 2.0 * a * norm.pdf(a) / z


def make_dist(vocab, probs):
    return DiscreteDistribution(vocab=vocab, probs=np.asarray(probs, dtype=float))


class TestApplyStrategy:
    def test_identity_unchanged(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        assert apply_strategy(d, Identity()) is d

    def test_temperature_halves_gaussian_variance(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        out = apply_strategy(d, Temperature(0.5))
        assert dist_variance_full(out) == pytest.approx(0.5, abs=2e-3)

    def test_temperature_two_doubles_gaussian_variance(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        out = apply_strategy(d, Temperature(2.0))
        assert dist_variance_full(out) == pytest.approx(2.0, abs=5e-3)

    def test_truncation_matches_closed_form(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        out = apply_strategy(d, SymmetricTruncate(1.0))
        assert dist_variance_full(out) == pytest.approx(truncated_normal_variance(1.0), abs=5e-3)

    def test_truncating_everything_rejected(self):
        v = Vocabulary(size=3, delta=10.0, v_min=-10.0)  # values -10, 0, 10
        d = make_dist(v, [0.5, 0.0, 0.5])  # mean 0, sd 10; hole at the mean
        with pytest.raises(ValidationError):
            apply_strategy(d, SymmetricTruncate(0.5))

    def test_top_k_keeps_most_probable_with_lower_index_ties(self):
        v = Vocabulary(size=4, delta=1.0, v_min=0.0)
        d = make_dist(v, [0.25, 0.25, 0.25, 0.25])
        out = apply_strategy(d, TopKMedian(3))
        np.testing.assert_allclose(out.probs, [1 / 3, 1 / 3, 1 / 3, 0.0])

    def test_top_k_renormalizes(self):
        v = Vocabulary(size=4, delta=1.0, v_min=0.0)
        d = make_dist(v, [0.1, 0.4, 0.3, 0.2])
        out = apply_strategy(d, TopKMedian(2))
        np.testing.assert_allclose(out.probs, [0.0, 4 / 7, 3 / 7, 0.0])

    def test_median_token(self):
        v = Vocabulary(size=4, delta=1.0, v_min=0.0)
        assert median_token(make_dist(v, [0.2, 0.2, 0.3, 0.3])) == 2
        assert median_token(make_dist(v, [0.5, 0.5, 0.0, 0.0])) == 0

    def test_strategy_parameter_validation(self):
        with pytest.raises(ValidationError):
            Temperature(0.0)
        with pytest.raises(ValidationError):
            SymmetricTruncate(-1.0)
        with pytest.raises(ValidationError):
            TopKMedian(0)


class TestGamma:
    def test_identity_gamma_is_one(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        assert gamma_of(d, apply_strategy(d, Identity())) == 1.0

    @pytest.mark.parametrize("t", [0.5, 0.7, 1.5])
    def test_temperature_gamma_equals_t(self, t):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        assert gamma_of(d, apply_strategy(d, Temperature(t))) == pytest.approx(t, abs=0.02)

    def test_truncation_gamma_matches_oracle(self):
        d = discretize_density(0.0, 1.0, "gaussian", FINE)
        got = gamma_of(d, apply_strategy(d, SymmetricTruncate(1.0)))
        assert got == pytest.approx(truncated_normal_variance(1.0), abs=0.01)

    def test_zero_variance_rejected(self):
        v = Vocabulary(size=5, delta=1.0, v_min=0.0)
        probs = np.zeros(5)
        probs[2] = 1.0
        d = make_dist(v, probs)
        with pytest.raises(ValidationError):
            gamma_of(d, d)

    def test_strategy_gamma_is_scale_free(self):
        # the cached unit-variance ratio matches a direct measurement at
        # a different scale on a fine grid
        direct_base = discretize_density(0.0, 4.0, "gaussian", Vocabulary(3201, 0.01, -16.0))
        direct = gamma_of(direct_base, apply_strategy(direct_base, Temperature(0.5)))
        assert strategy_gamma(Temperature(0.5), "gaussian") == pytest.approx(direct, abs=1e-3)


class TestSyntheticIdealModel:
    def test_zero_noise_gives_point_mass_at_trend(self):
        trend = TrendSpec(kind="sine", amplitude=1.0, period=32.0)
        noise = NoiseSpec("gaussian", (1.0,), (0.0,))
        vocab = Vocabulary.from_span(size=512, span=(-2.0, 2.0))
        model = SyntheticIdealModel(trend, noise, vocab)
        prefix = [trend.value(t) for t in range(1, 8)]
        d = model.internal_distribution(prefix)
        assert d.probs[quantize(trend.value(8), vocab)] == 1.0

    def test_unit_variance_rows_are_discretized_standard_normal(self):
        trend = TrendSpec(kind="constant", offset=0.0)
        noise = NoiseSpec("gaussian", (1.0,), (1.0,))
        model = SyntheticIdealModel(trend, noise, FINE)
        d = model.internal_distribution(np.zeros(16))
        assert abs(dist_variance_full(d) - 1.0) < 1e-3
        assert abs(dist_mean(d)) < 1e-6

    def test_distribution_depends_only_on_prefix_length(self):
        trend = TrendSpec(kind="linear", slope=0.05)
        noise = NoiseSpec("gaussian", (0.5, 0.5), (1.0, 2.0))
        vocab = Vocabulary.from_span(size=256, span=(-8.0, 8.0))
        model = SyntheticIdealModel(trend, noise, vocab)
        a = model.internal_distribution(np.zeros(6))
        b = model.internal_distribution(np.full(6, 3.33))
        np.testing.assert_array_equal(a.probs, b.probs)

    def test_short_prefix_rejected(self):
        trend = TrendSpec(kind="constant", offset=0.0)
        noise = NoiseSpec("gaussian", (1.0,), (1.0,))
        model = SyntheticIdealModel(trend, noise, FINE, min_history=4)
        with pytest.raises(ValidationError):
            model.internal_distribution([0.0, 0.0])


class TestGenerate:
    def setup_method(self):
        self.trend = TrendSpec(kind="constant", offset=0.0)
        self.noise = NoiseSpec("gaussian", (1.0,), (1.0,))
        self.vocab = Vocabulary.from_span(size=1024, span=(-8.0, 8.0))
        self.model = SyntheticIdealModel(self.trend, self.noise, self.vocab)
        self.history = np.zeros(8)

    def test_zero_noise_forecast_equals_trend_continuation(self):
        trend = TrendSpec(kind="sine", amplitude=1.0, period=16.0)
        noise = NoiseSpec("gaussian", (1.0,), (0.0,))
        vocab = Vocabulary.from_span(size=4096, span=(-2.0, 2.0))
        model = SyntheticIdealModel(trend, noise, vocab)
        history = [trend.value(t) for t in range(1, 9)]
        for strategy in (Identity(), Temperature(0.5), TopKMedian(3)):
            out = generate(model, history, 16, strategy, seed=3)
            expected = [trend.value(t) for t in range(9, 25)]
            np.testing.assert_allclose(out.values, expected, atol=vocab.delta / 2)

    def test_identity_variance_is_a_fixed_point(self):
        out = generate(self.model, self.history, 128, Identity(), seed=1)
        np.testing.assert_allclose(out.internal_variances, 1.0, rtol=1e-12)
        np.testing.assert_allclose(out.gammas, 1.0, rtol=1e-12)

    def test_temperature_decay_is_geometric(self):
        out = generate(self.model, self.history, 24, Temperature(0.5), seed=1)
        expected = 0.5 ** np.arange(24)
        np.testing.assert_allclose(out.internal_variances, expected, rtol=1e-6)
        assert out.internal_variances[11] < 1e-3  # below 1e-3 by step 12

    def test_reproducible_per_seed(self):
        a = generate(self.model, self.history, 32, Temperature(0.8), seed=9)
        b = generate(self.model, self.history, 32, Temperature(0.8), seed=9)
        np.testing.assert_array_equal(a.values, b.values)

    def test_top_k_median_feeds_back_zero_variance(self):
        out = generate(self.model, self.history, 8, TopKMedian(5), seed=2)
        assert out.internal_variances[0] == 1.0
        assert np.all(out.fed_variances == 0.0)
        # after the first step the recursion has collapsed
        np.testing.assert_allclose(out.internal_variances[1:], 0.0, atol=1e-300)

    def test_history_shorter_than_minimum_rejected(self):
        model = SyntheticIdealModel(self.trend, self.noise, self.vocab, min_history=10)
        with pytest.raises(ValidationError):
            generate(model, np.zeros(4), 8, Identity(), seed=0)


class TestRecursionRegimes:
    def make_model(self, weights, seeds):
        trend = TrendSpec(kind="constant", offset=0.0)
        noise = NoiseSpec("gaussian", tuple(weights), tuple(seeds))
        vocab = Vocabulary.from_span(size=512, span=(-8.0, 8.0))
        return SyntheticIdealModel(trend, noise, vocab)

    def test_contraction_for_random_orders(self):
        rng = np.random.default_rng(7)
        for _ in range(6):
            l = int(rng.integers(1, 4))
            weights = rng.dirichlet(np.ones(l))
            seeds = rng.uniform(0.5, 2.0, size=l)
            q = float(rng.uniform(0.3, 0.9))
            model = self.make_model(weights, seeds)
            out = generate(model, np.zeros(max(l, 1)), 256, Temperature(q), seed=11)
            v = out.internal_variances
            slope = np.polyfit(np.arange(256), np.log(v), 1)[0]
            assert slope < 0
            assert v[255] < 1e-3 * v[0]

    def test_divergence_at_temperature_two(self):
        model = self.make_model([1.0], [1.0])
        out = generate(model, np.zeros(4), 64, Temperature(2.0), seed=5)
        v = out.internal_variances
        assert np.any(v[:64] > 10.0 * v[0])

    def test_identity_stays_in_seed_envelope(self):
        model = self.make_model([0.5, 0.3, 0.2], [1.0, 4.0, 2.25])
        out = generate(model, np.zeros(4), 256, Identity(), seed=5)
        v = out.internal_variances
        assert np.all(v >= 1.0 - 1e-12) and np.all(v <= 4.0 + 1e-12)

    def test_characteristic_roots_inside_unit_circle(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            l = int(rng.integers(1, 6))
            alphas = rng.dirichlet(np.ones(l))
            q = float(rng.uniform(0.0, 0.999))
            roots = np.roots(np.concatenate([[1.0], -q * alphas]))
            assert np.all(np.abs(roots) < 1.0 - 1e-9)

    def test_gaussian_tail_stochastic_dominance(self):
        sigma1, sigma2 = 0.7, 1.3
        for z in np.linspace(0.0, 6.0, 61):
            p1 = math.erfc(z / (sigma1 * math.sqrt(2)))
            p2 = math.erfc(z / (sigma2 * math.sqrt(2)))
            assert p1 <= p2 + 1e-15


class TestMeanPreservation:
    STRATEGIES = [
        Temperature(0.5),
        Temperature(2.0),
        SymmetricTruncate(0.5),
        SymmetricTruncate(1.0),
        SymmetricTruncate(2.0),
        TopKMedian(7),
    ]

    def test_symmetric_distributions_keep_their_mean(self):
        # the span must hold the flattened (T=2) tails too, otherwise the
        # finite grid truncates them asymmetrically
        rng = np.random.default_rng(21)
        vocab = Vocabulary.from_span(size=2048, span=(-30.0, 30.0))
        for _ in range(50):
            mean = float(rng.uniform(-3.0, 3.0))
            var = float(rng.uniform(0.25, 3.0))
            family = str(rng.choice(["gaussian", "laplace", "student_t"]))
            d = discretize_density(mean, var, family, vocab, df=7.0)
            for strategy in self.STRATEGIES:
                shift = abs(dist_mean(apply_strategy(d, strategy)) - dist_mean(d))
                assert shift <= vocab.delta, (family, mean, var, strategy, shift)

    def test_forecast_mean_tracks_trend(self):
        # Monte Carlo over seeded generations: the average forecast at
        # each step matches the trend continuation within 3 standard errors.
        trend = TrendSpec(kind="sine", amplitude=1.0, period=24.0, offset=0.5)
        noise = NoiseSpec("gaussian", (1.0,), (1.0,))
        vocab = Vocabulary.from_span(size=512, span=(-6.0, 6.0))
        model = SyntheticIdealModel(trend, noise, vocab)
        history = [trend.value(t) for t in range(1, 9)]
        n_runs, horizon = 10_000, 16
        values = np.empty((n_runs, horizon))
        for r in range(n_runs):
            values[r] = generate(model, history, horizon, Identity(), seed=r).values
        target = np.array([trend.value(t) for t in range(9, 9 + horizon)])
        err = np.abs(values.mean(axis=0) - target)
        limit = 3.0 * values.std(axis=0, ddof=1) / math.sqrt(n_runs)
        assert np.all(err <= limit + vocab.delta / 2)


class TestReplayModel:
    def make_replay(self):
        trend = TrendSpec(kind="constant", offset=0.0)
        noise = NoiseSpec("gaussian", (1.0,), (1.0,))
        vocab = Vocabulary.from_span(size=256, span=(-6.0, 6.0))
        model = SyntheticIdealModel(trend, noise, vocab)
        history = np.zeros(6)
        result = generate(model, history, 12, Temperature(0.5), seed=4)
        return result, replay_from_generation(result, model, history)

    def test_rows_replay_bit_identical(self):
        result, replay = self.make_replay()
        for k, dist in enumerate(result.internal_distributions):
            np.testing.assert_array_equal(
                replay.internal_distribution(np.zeros(k)).probs, dist.probs
            )

    def test_out_of_range_prefix_rejected(self):
        _, replay = self.make_replay()
        with pytest.raises(ValidationError):
            replay.internal_distribution(np.zeros(12))

    def test_observed_tokens_require_matching_length(self):
        result, replay = self.make_replay()
        np.testing.assert_array_equal(replay.observed_tokens(result.values), result.tokens)
        with pytest.raises(ValidationError):
            replay.observed_tokens(result.values[:5])

    def test_regeneration_delegates_to_source(self):
        result, replay = self.make_replay()
        assert replay.supports_generation
        regen = replay.regenerate(result.values[:6], 4, seed=1)
        assert len(regen) == 4

    def test_non_value_space_replay_cannot_tokenize(self):
        result, replay = self.make_replay()
        bare = ReplayModel(
            vocab=replay.vocabulary(),
            rows=result.internal_distributions,
            observed=result.tokens,
        )
        with pytest.raises(UnsupportedDetectorError):
            bare.tokenize(result.values)
        with pytest.raises(UnsupportedDetectorError):
            bare.regenerate(result.values[:6], 4, seed=1)
