import math

import numpy as np
import pytest

from aggloc.errors import InvariantError
from aggloc.metrics import (
    js_distance,
    kl_divergence,
    localization_error,
    mre,
    privacy_gain,
    privacy_loss,
    profiling_error,
)


def random_distribution(rng, n):
    return rng.dirichlet(np.ones(n))


class TestKL:
    def test_identical_is_zero(self):
        w = np.array([0.2, 0.3, 0.5])
        assert kl_divergence(w, w) == 0.0

    def test_direct_evaluation(self):
        value = kl_divergence([0.5, 0.5], [0.25, 0.75])
        expected = 0.5 * math.log2(0.5 / 0.25) + 0.5 * math.log2(0.5 / 0.75)
        assert value == pytest.approx(expected, abs=1e-12)
        assert round(value, 5) == 0.20752

    def test_disjoint_support_is_infinite(self):
        assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf

    def test_zero_w_terms_contribute_nothing(self):
        assert kl_divergence([0.0, 1.0], [0.5, 0.5]) == pytest.approx(1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvariantError):
            kl_divergence([1.0], [0.5, 0.5])


class TestJSDistance:
    def test_identical_is_zero(self):
        w = np.array([0.4, 0.6])
        assert js_distance(w, w) == 0.0

    def test_disjoint_support_is_one(self):
        assert js_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    def test_symmetry_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            w = random_distribution(rng, 6)
            x = random_distribution(rng, 6)
            assert js_distance(w, x) == pytest.approx(js_distance(x, w), abs=1e-12)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            w = random_distribution(rng, 4)
            x = random_distribution(rng, 4)
            assert 0.0 <= js_distance(w, x) <= 1.0

    def test_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            a, b, c = (random_distribution(rng, 5) for _ in range(3))
            assert js_distance(a, c) <= js_distance(a, b) + js_distance(b, c) + 1e-9

    def test_matches_scalar_kl_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            w = random_distribution(rng, 5)
            x = random_distribution(rng, 5)
            z = 0.5 * (w + x)
            expected = math.sqrt(0.5 * kl_divergence(w, z) + 0.5 * kl_divergence(x, z))
            assert js_distance(w, x) == pytest.approx(expected, abs=1e-12)


class TestProfilingError:
    def test_exact_estimate_scores_zero(self):
        truth = np.array([[0.5, 1.0], [0.5, 0.0]])
        score = profiling_error(truth, truth)
        assert score.total == 0.0

    def test_disjoint_every_slot_scores_one(self):
        truth = np.array([[1.0, 1.0], [0.0, 0.0]])
        estimate = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert profiling_error(truth, estimate).total == pytest.approx(1.0)

    def test_total_is_mean_of_slots(self):
        rng = np.random.default_rng(4)
        truth = rng.dirichlet(np.ones(4), size=3).T
        estimate = rng.dirichlet(np.ones(4), size=3).T
        score = profiling_error(truth, estimate)
        slots = [js_distance(truth[:, t], estimate[:, t]) for t in range(3)]
        assert np.allclose(score.per_slot, slots)
        assert score.total == pytest.approx(sum(slots) / 3, abs=1e-12)

    def test_blank_estimate_column_scored_as_uniform(self):
        truth = np.array([[1.0], [0.0]])
        estimate = np.array([[0.0], [0.0]])
        score = profiling_error(truth, estimate)
        assert score.total == pytest.approx(js_distance([1.0, 0.0], [0.5, 0.5]))


def oracle_confusion(truth, estimate):
    tp = fp = fn = 0
    for s in range(truth.shape[0]):
        for t in range(truth.shape[1]):
            if truth[s, t] == 1 and estimate[s, t] == 1:
                tp += 1
            elif truth[s, t] == 0 and estimate[s, t] == 1:
                fp += 1
            elif truth[s, t] == 1 and estimate[s, t] == 0:
                fn += 1
    return tp, fp, fn


class TestLocalizationError:
    def test_exact_estimate_scores_zero(self):
        truth = np.array([[1, 0], [0, 1]])
        assert localization_error(truth, truth).total == 0.0

    def test_direct_counts(self):
        # TP=2, FP=1, FN=1 -> F1 = 2/3, error = 1/3
        truth = np.array([[1, 1, 1, 0]])
        estimate = np.array([[1, 1, 0, 1]])
        assert localization_error(truth, estimate).total == pytest.approx(1 / 3)

    def test_all_zero_estimate_scores_one(self):
        truth = np.array([[1, 0], [0, 1]])
        estimate = np.zeros_like(truth)
        assert localization_error(truth, estimate).total == 1.0

    def test_matches_confusion_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            shape = (int(rng.integers(1, 6)), int(rng.integers(1, 6)))
            truth = rng.integers(0, 2, size=shape)
            estimate = rng.integers(0, 2, size=shape)
            tp, fp, fn = oracle_confusion(truth, estimate)
            expected = 0.0 if 2 * tp + fp + fn == 0 else 1 - 2 * tp / (2 * tp + fp + fn)
            assert localization_error(truth, estimate).total == pytest.approx(expected)

    def test_non_binary_rejected(self):
        with pytest.raises(InvariantError):
            localization_error(np.array([[2]]), np.array([[1]]))


class TestPrivacyLossGain:
    def test_loss_direct(self):
        assert privacy_loss(0.4, 0.3) == pytest.approx(0.25)

    def test_loss_zero_when_attack_hurts(self):
        assert privacy_loss(0.4, 0.5) == 0.0

    def test_loss_zero_prior_guard(self):
        assert privacy_loss(0.0, 0.7) == 0.0

    def test_gain_direct(self):
        assert privacy_gain(0.2, 0.6) == pytest.approx(0.5)

    def test_gain_zero_when_noise_helps_adversary(self):
        assert privacy_gain(0.2, 0.1) == 0.0

    def test_gain_guard_at_full_error(self):
        assert privacy_gain(1.0, 1.0) == 0.0

    def test_outputs_bounded(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            a, b = rng.random(2)
            assert 0.0 <= privacy_loss(a, b) <= 1.0
            assert 0.0 <= privacy_gain(a, b) <= 1.0


class TestMre:
    def test_identical_series(self):
        assert mre([3.0, 4.0], [3.0, 4.0]) == 0.0

    def test_direct_substitution(self):
        # beta = 0.001 * 20 = 0.02; terms 1/10 and 1/10
        assert mre([10.0, 10.0], [11.0, 9.0]) == pytest.approx(0.1)

    def test_linear_in_deviation(self):
        y = np.array([5.0, 7.0, 2.0])
        base = mre(y, y + np.array([1.0, -1.0, 0.5]))
        doubled = mre(y, y + np.array([2.0, -2.0, 1.0]))
        assert doubled == pytest.approx(2 * base)

    def test_beta_floors_small_counts(self):
        # y_i = 0 is divided by beta, not zero
        value = mre([0.0, 100.0], [1.0, 100.0])
        beta = 0.001 * 100.0
        assert value == pytest.approx(0.5 * (1.0 / beta))

    def test_empty_rejected(self):
        with pytest.raises(InvariantError):
            mre([], [])
