import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybriddp.core import CURATOR, BudgetExceeded, PrivacyLedger
from hybriddp.curator import (
    ScoredCandidateSet,
    bits_to_int,
    em_probabilities,
    empirical_error,
    exponential_mechanism,
    int_to_bits,
    laplace_mean,
    learn_parity_private,
    parity,
    parity_errors,
    parity_probabilities,
    parity_sample_size,
    select_max_coordinate,
)


class TestExponentialMechanism:
    def test_law(self):
        p = em_probabilities([0.0, 1.0, 3.0], 2.0, 1.0)
        w = np.exp([0.0, 1.0, 3.0])
        assert np.allclose(p, w / w.sum())

    def test_infinite_epsilon_picks_lowest_argmax(self):
        assert list(em_probabilities([1.0, 5.0, 5.0], math.inf, 1.0)) == [0.0, 1.0, 0.0]

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=2, max_size=8),
        st.integers(0, 7),
        st.floats(-1, 1),
        st.floats(0.1, 3.0),
    )
    def test_privacy_ratio(self, scores, where, bump, eps):
        """Changing one score by at most the sensitivity moves each probability by at most e^eps."""
        where %= len(scores)
        other = list(scores)
        other[where] += bump
        p, q = em_probabilities(scores, eps, 1.0), em_probabilities(other, eps, 1.0)
        assert np.all(np.abs(np.log(p) - np.log(q)) <= eps + 1e-9)

    def test_sampling_frequencies(self):
        cs = ScoredCandidateSet(["a", "b", "c"], lambda c, db: db[c], 1.0)
        db = {"a": 0.0, "b": 1.0, "c": 2.0}
        rng = np.random.default_rng(0)
        draws = [exponential_mechanism(cs, db, 1.0, rng) for _ in range(20_000)]
        expect = em_probabilities([0, 1, 2], 1.0, 1.0)
        got = np.array([draws.count(c) for c in "abc"]) / len(draws)
        assert np.allclose(got, expect, atol=0.015)

    def test_charges_ledger(self):
        cs = ScoredCandidateSet([0, 1], lambda c, db: c, 1.0)
        led = PrivacyLedger(1.0)
        exponential_mechanism(cs, None, 0.6, np.random.default_rng(0), ledger=led)
        assert led.total(CURATOR) == pytest.approx(0.6)
        with pytest.raises(BudgetExceeded):
            exponential_mechanism(cs, None, 0.6, np.random.default_rng(0), ledger=led)

    def test_bad_sensitivity(self):
        with pytest.raises(ValueError):
            ScoredCandidateSet([0], lambda c, db: 0, 0)


class TestParity:
    def test_bit_packing(self):
        assert bits_to_int([1, 0, 1]) == 5
        assert list(int_to_bits(5, 4)) == [1, 0, 1, 0]

    def test_parity_values(self):
        assert parity(0b101, 0b100) == 1
        assert parity(0b101, 0b101) == 0
        assert list(parity(3, np.arange(4))) == [0, 1, 1, 0]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31))
    def test_errors_match_brute_force(self, c, seed):
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, 1 << c, 50)
        labels = rng.integers(0, 2, 50)
        brute = [sum((bin(k & int(x)).count("1") & 1) != y for x, y in zip(xs, labels)) for k in range(1 << c)]
        assert np.allclose(parity_errors(xs, labels, c), brute)

    def test_learner_recovers_target(self):
        rng = np.random.default_rng(1)
        c, k_star = 6, 0b101101
        m = parity_sample_size(c, 0.1, 0.05, 1.0)
        xs = rng.integers(0, 1 << c, m)
        hits = sum(learn_parity_private(xs, parity(k_star, xs), c, 1.0, rng) == k_star for _ in range(50))
        assert hits >= 48

    def test_probabilities_sum_to_one(self):
        xs = np.arange(8)
        p = parity_probabilities(xs, parity(5, xs), 3, 1.0)
        assert p.sum() == pytest.approx(1.0)
        assert int(np.argmax(p)) == 5

    def test_empirical_error(self):
        xs = np.arange(8)
        assert empirical_error(5, xs, parity(5, xs)) == 0.0
        assert empirical_error(0, xs, parity(5, xs)) == 0.5


class TestSelectionAndMean:
    def test_select_max_coordinate(self):
        rng = np.random.default_rng(2)
        sample = np.where(rng.random((4000, 5)) < [0.5, 0.5, 0.9, 0.5, 0.5], 1.0, -1.0)
        picks = [select_max_coordinate(sample, 1.0, rng) for _ in range(100)]
        assert picks.count(2) >= 95

    def test_single_coordinate(self):
        assert select_max_coordinate(np.ones((3, 1)), 1.0, np.random.default_rng(0)) == 0

    def test_select_rejects_empty(self):
        with pytest.raises(ValueError):
            select_max_coordinate(np.zeros((0, 3)), 1.0, np.random.default_rng(0))

    def test_laplace_mean_noise_scale(self):
        rng = np.random.default_rng(3)
        values = np.full(100, 0.25)
        draws = np.array([laplace_mean(values, 1.0, rng) for _ in range(20_000)])
        assert abs(draws.mean() - 0.25) < 0.002
        # Laplace(b) has variance 2 b^2 with b = 1 / (m eps)
        assert draws.var() == pytest.approx(2 * 0.01**2, rel=0.05)

    def test_laplace_mean_clips(self):
        assert laplace_mean([5.0, -5.0], math.inf, None) == 0.5

    def test_laplace_mean_empty(self):
        with pytest.raises(ValueError):
            laplace_mean([], 1.0, np.random.default_rng(0))


class TestMechanismExamples:
    def test_single_candidate(self):
        cands = ScoredCandidateSet(["only"], lambda c, db: 0.0, 1.0)
        for seed in range(20):
            assert exponential_mechanism(cands, None, 1.0, np.random.default_rng(seed)) == "only"

    def test_equal_scores_split_evenly(self):
        assert np.allclose(em_probabilities([3.0, 3.0], 1.0, 1.0), [0.5, 0.5])

    @pytest.mark.slow
    def test_two_scores_closed_form(self):
        expected = math.e / (math.e + 1)
        assert em_probabilities([1.0, 0.0], 2.0, 1.0)[0] == pytest.approx(expected)
        cands = ScoredCandidateSet([0, 1], lambda c, db: 1.0 - c, 1.0)
        rng = np.random.default_rng(5)
        trials = 100_000
        firsts = sum(exponential_mechanism(cands, None, 2.0, rng) == 0 for _ in range(trials))
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(firsts / trials - expected) <= 4 * se


class TestParityExamples:
    def test_full_domain_sample(self):
        k_star = 0b101
        xs = np.arange(8)
        labels = parity(k_star, xs)
        errors = parity_errors(xs, labels, 3)
        assert errors[k_star] == 0
        assert np.all(np.delete(errors, k_star) == 4)
        assert parity_probabilities(xs, labels, 3, 50.0)[k_star] >= 0.999

    def test_empty_sample_is_uniform(self):
        assert np.allclose(parity_probabilities([], [], 4, 1.0), np.full(16, 1 / 16))

    @pytest.mark.slow
    def test_consistent_sample_rate(self):
        c, hits = 10, 0
        m = 200 * c
        for trial in range(100):
            rng = np.random.default_rng(trial)
            k_star = int(rng.integers(0, 1 << c))
            xs = rng.integers(0, 1 << c, m)
            labels = parity(k_star, xs)
            k = learn_parity_private(xs, labels, c, 1.0, rng, alpha=0.25)
            hits += empirical_error(k, xs, labels) <= 0.25
        assert hits >= 90


class TestSelectionExamples:
    def test_separated_means(self):
        d, m = 8, 100
        sample = np.tile([1.0] + [-1.0] * (d - 1), (m, 1))
        means = sample.mean(axis=0)
        assert em_probabilities(means, 50.0, 2.0 / m)[0] >= 0.999
        assert select_max_coordinate(sample, 50.0, np.random.default_rng(0)) == 0

    def test_one_bump_among_many(self):
        d, m, hits = 64, 2000, 0
        mu = np.zeros(d)
        mu[0] = 0.5
        for trial in range(100):
            rng = np.random.default_rng(trial)
            sample = np.where(rng.random((m, d)) < (1 + mu) / 2, 1.0, -1.0)
            hits += mu[select_max_coordinate(sample, 1.0, rng)] >= 0.5 - 0.2
        assert hits >= 95

    def test_laplace_high_epsilon(self):
        for seed in range(100):
            assert abs(laplace_mean(np.ones(10_000), 50.0, np.random.default_rng(seed)) - 1.0) <= 0.01

    def test_laplace_infinite_epsilon_exact(self):
        values = np.random.default_rng(1).random(500)
        assert laplace_mean(values, math.inf, np.random.default_rng(0)) == pytest.approx(values.mean())

    def test_laplace_same_seed(self):
        values = np.linspace(0, 1, 50)
        a = laplace_mean(values, 1.0, np.random.default_rng(7))
        assert laplace_mean(values, 1.0, np.random.default_rng(7)) == a
