"""Streams, discrete sampling, and the distribution kit."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinsim import (
    Constant,
    DiscreteDistribution,
    Exponential,
    RngStream,
    Uniform,
    make_distribution,
    mean_of,
    sample_discrete,
    substream,
)
from kinsim.errors import ConfigurationError
from kinsim.randomness import distribution_config

# Offspring-per-couple law: 10/20/30/30/8/2 percent for 0..5 children,
# stored in cumulative form.
OFFSPRING_PAIRS = [(0, 0.10), (1, 0.30), (2, 0.60), (3, 0.90), (4, 0.98), (5, 1.00)]
OFFSPRING = DiscreteDistribution(OFFSPRING_PAIRS)


def offspring_mean_oracle() -> Fraction:
    # Independent expected-value computation in exact arithmetic.
    probs = [Fraction(10, 100), Fraction(20, 100), Fraction(30, 100),
             Fraction(30, 100), Fraction(8, 100), Fraction(2, 100)]
    return sum(value * p for value, p in zip(range(6), probs))


class TestSampleDiscrete:
    @pytest.mark.parametrize(
        "u,expected",
        [
            (0.0, 0),
            (0.05, 0),
            (0.10, 1),  # boundary goes to the next entry: u < cum_prob is strict
            (0.25, 1),
            (0.30, 2),
            (0.59, 2),
            (0.89, 3),
            (0.95, 4),
            (0.979, 4),
            (0.98, 5),
            (0.999, 5),
        ],
    )
    def test_cumulative_scan(self, u, expected):
        assert sample_discrete(OFFSPRING, u) == expected

    def test_single_entry_always_selected(self):
        dist = DiscreteDistribution([(7, 1.0)])
        for u in (0.0, 0.3, 0.999999):
            assert sample_discrete(dist, u) == 7

    @given(st.floats(min_value=0.0, max_value=0.9999999, allow_nan=False))
    def test_matches_searchsorted(self, u):
        # Cross-check against numpy's independent inverse-CDF lookup.
        expected = OFFSPRING.values[int(np.searchsorted(OFFSPRING.cum_probs, u, side="right"))]
        assert sample_discrete(OFFSPRING, u) == expected

    @given(
        st.floats(min_value=0.0, max_value=0.999999, allow_nan=False),
        st.floats(min_value=0.0, max_value=0.999999, allow_nan=False),
    )
    def test_monotone_in_u(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert sample_discrete(OFFSPRING, lo) <= sample_discrete(OFFSPRING, hi)


class TestMeanOf:
    def test_offspring_mean_is_2_12(self):
        oracle = offspring_mean_oracle()
        assert oracle == Fraction(53, 25)  # 2.12
        assert mean_of(OFFSPRING) == pytest.approx(float(oracle), rel=1e-12)

    def test_degenerate(self):
        assert mean_of(DiscreteDistribution([(7, 1.0)])) == 7.0

    def test_symmetric(self):
        assert mean_of(DiscreteDistribution([(0, 0.5), (2, 1.0)])) == 1.0


class TestDiscreteValidation:
    def test_rejects_empty(self):
        with pytest.raises(ConfigurationError):
            DiscreteDistribution([])

    def test_rejects_non_increasing(self):
        with pytest.raises(ConfigurationError):
            DiscreteDistribution([(0, 0.5), (1, 0.5), (2, 1.0)])

    def test_rejects_short_total(self):
        with pytest.raises(ConfigurationError):
            DiscreteDistribution([(0, 0.5), (1, 0.9)])

    def test_rejects_duplicate_values(self):
        with pytest.raises(ConfigurationError):
            DiscreteDistribution([(1, 0.5), (1, 1.0)])

    def test_rejects_fractional_values(self):
        with pytest.raises(ConfigurationError):
            DiscreteDistribution([(0.5, 1.0)])

    def test_normalizes_tiny_closing_deficit(self):
        dist = DiscreteDistribution([(0, 0.4), (1, 1.0 - 5e-13)])
        assert dist.cum_probs[-1] == 1.0

    def test_empirical_frequencies_within_3_sigma(self):
        n = 100_000
        us = substream(777, 0).uniforms(n)
        counts = np.bincount(np.searchsorted(OFFSPRING.cum_probs, us, side="right"), minlength=6)
        previous = 0.0
        for i, cum in enumerate(OFFSPRING.cum_probs):
            p = cum - previous
            previous = cum
            sigma = math.sqrt(p * (1 - p) / n)
            assert abs(counts[i] / n - p) <= 3 * sigma
        # and the scalar sampler agrees with the vectorized tally pointwise
        for u in us[:2000]:
            expected = OFFSPRING.values[int(np.searchsorted(OFFSPRING.cum_probs, u, side="right"))]
            assert sample_discrete(OFFSPRING, float(u)) == expected


class TestStreams:
    def test_same_seed_same_sequence(self):
        a = substream(1234, 0)
        b = substream(1234, 0)
        assert np.array_equal(a.uniforms(1000), b.uniforms(1000))

    def test_distinct_replications_differ(self):
        a = substream(1234, 0).uniforms(10_000)
        b = substream(1234, 1).uniforms(10_000)
        assert not np.array_equal(a, b)

    def test_ten_replications_reproducible(self):
        first = [substream(99, r).uniform() for r in range(10)]
        second = [substream(99, r).uniform() for r in range(10)]
        assert first == second
        assert len(set(first)) == 10  # streams are pairwise distinct in practice

    def test_named_streams_differ_from_root_and_each_other(self):
        root = substream(5, 0)
        a = root.named("offspring")
        b = root.named("disorder")
        assert a.seed != b.seed
        assert not np.array_equal(a.uniforms(100), b.uniforms(100))

    def test_named_streams_deterministic(self):
        assert substream(5, 3).named("x").uniform() == substream(5, 3).named("x").uniform()

    def test_negative_replication_rejected(self):
        with pytest.raises(ConfigurationError):
            substream(1, -1)

    def test_uniform_range(self):
        stream = substream(2, 0)
        samples = stream.uniforms(10_000)
        assert samples.min() >= 0.0 and samples.max() < 1.0


class TestDistributions:
    def test_constant_consumes_no_randomness(self):
        stream = RngStream(31)
        Constant(4.0).sample(stream)
        assert stream.uniform() == RngStream(31).uniform()

    def test_exponential_inverse_cdf(self):
        stream_a = RngStream(7)
        stream_b = RngStream(7)
        sample = Exponential(3.0).sample(stream_a)
        assert sample == -3.0 * math.log(1.0 - stream_b.uniform())

    def test_exponential_mean_within_3_sigma(self):
        n, mean = 20_000, 2.5
        stream = RngStream(11)
        total = sum(Exponential(mean).sample(stream) for _ in range(n))
        assert abs(total / n - mean) <= 3 * mean / math.sqrt(n)

    def test_uniform_bounds(self):
        stream = RngStream(3)
        dist = Uniform(2.0, 5.0)
        for _ in range(100):
            assert 2.0 <= dist.sample(stream) < 5.0

    def test_uniform_rejects_inverted_bounds(self):
        with pytest.raises(ConfigurationError):
            Uniform(5.0, 2.0)

    def test_exponential_rejects_nonpositive_mean(self):
        with pytest.raises(ConfigurationError):
            Exponential(0.0)


class TestDistributionConfig:
    @pytest.mark.parametrize(
        "config",
        [
            {"type": "constant", "value": 1.5},
            {"type": "uniform", "low": 0.0, "high": 2.0},
            {"type": "exponential", "mean": 0.7},
            {"type": "discrete", "pairs": [[0, 0.25], [3, 1.0]]},
        ],
    )
    def test_round_trip(self, config):
        dist = make_distribution(config)
        assert make_distribution(distribution_config(dist)) == dist or not isinstance(
            dist, DiscreteDistribution
        )

    def test_unknown_type_rejected(self):
        with pytest.raises(ConfigurationError):
            make_distribution({"type": "zipf", "s": 2})

    def test_missing_field_rejected(self):
        with pytest.raises(ConfigurationError):
            make_distribution({"type": "constant"})

    def test_missing_type_rejected(self):
        with pytest.raises(ConfigurationError):
            make_distribution({"value": 1.0})
