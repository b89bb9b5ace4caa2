"""Tests for temporal signals, the confidence proxy and the combiner score."""

import math
import unittest

import numpy as np

from streamtrust.config import SignalConfig
from streamtrust.errors import DimensionMismatchError, FeaturesDisabledError
from streamtrust.models import CombinerParams, SignalVector
from streamtrust.signals import (
    compute_signals,
    confidence_proxy,
    cosine,
    divergence_signal,
    jsd,
    persistence_signal,
    stability_signal,
    uncertainty_score,
)
from streamtrust.window import TemporalWindow


def oracle_jsd(p, q, eps):
    """Direct summation of 0.5 * KL(p||m) + 0.5 * KL(q||m)."""
    n = len(p)
    ps = [(x + eps) / (1 + n * eps) for x in p]
    qs = [(x + eps) / (1 + n * eps) for x in q]
    total = 0.0
    for a, b in zip(ps, qs):
        m = (a + b) / 2
        if a > 0:
            total += 0.5 * a * math.log(a / m)
        if b > 0:
            total += 0.5 * b * math.log(b / m)
    return total


class TestJSD(unittest.TestCase):

    def test_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = rng.dirichlet(np.ones(6))
            self.assertAlmostEqual(jsd(p, p, 1e-6), 0.0, places=12)

    def test_disjoint_support_maximum(self):
        value = jsd(np.array([1.0, 0.0]), np.array([0.0, 1.0]), epsilon=0.0)
        self.assertAlmostEqual(value, math.log(2), places=12)

    def test_matches_oracle(self):
        p, q = [0.7, 0.3], [0.3, 0.7]
        self.assertAlmostEqual(jsd(np.array(p), np.array(q), 1e-6), oracle_jsd(p, q, 1e-6), places=12)
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = rng.dirichlet(np.ones(10))
            q = rng.dirichlet(np.ones(10))
            self.assertAlmostEqual(jsd(p, q), oracle_jsd(list(p), list(q), 1e-6), places=10)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.dirichlet(np.full(5, 0.3))
            q = rng.dirichlet(np.full(5, 0.3))
            self.assertAlmostEqual(jsd(p, q), jsd(q, p), places=12)
            self.assertGreaterEqual(jsd(p, q), 0.0)
            self.assertLessEqual(jsd(p, q), math.log(2))

    def test_errors(self):
        with self.assertRaises(DimensionMismatchError):
            jsd(np.array([0.5, 0.5]), np.array([0.2, 0.3, 0.5]))
        with self.assertRaises(ValueError):
            jsd(np.array([np.nan, 1.0]), np.array([0.5, 0.5]))


class TestCosine(unittest.TestCase):

    def test_zero_vector(self):
        self.assertEqual(cosine(np.zeros(3), np.array([1.0, 2.0, 3.0])), 0.0)

    def test_parallel_and_orthogonal(self):
        self.assertAlmostEqual(cosine(np.array([1.0, 2.0]), np.array([2.0, 4.0])), 1.0)
        self.assertEqual(cosine(np.array([1.0, 0.0]), np.array([0.0, 5.0])), 0.0)


def filled_window(posteriors, features=None, labels=None, capacity=16):
    n = len(posteriors[0])
    d = len(features[0]) if features is not None else 0
    window = TemporalWindow(capacity, n, d)
    for i, p in enumerate(posteriors):
        f = np.asarray(features[i]) if features is not None else None
        label = labels[i] if labels is not None else int(np.argmax(p))
        window.push(np.asarray(p), f, label)
    return window


class TestTemporalSignals(unittest.TestCase):
    """Test D_t, S_t and c_t against per-lag oracles."""

    def setUp(self):
        self.cfg = SignalConfig()

    def test_divergence_zero_when_history_equal(self):
        p = np.array([0.6, 0.3, 0.1])
        window = filled_window([p] * 5)
        self.assertAlmostEqual(divergence_signal(window, p, self.cfg), 0.0, places=12)

    def test_divergence_renormalizes_to_single_lag(self):
        cfg = SignalConfig(lag_set=(1, 2, 4), lag_weights=(0.5, 0.25, 0.25))
        prev = np.array([0.2, 0.8])
        current = np.array([0.9, 0.1])
        window = filled_window([prev])
        self.assertAlmostEqual(divergence_signal(window, current, cfg), jsd(current, prev), places=12)

    def test_divergence_weighted_over_full_lag_set(self):
        rng = np.random.default_rng(4)
        history = [rng.dirichlet(np.ones(4)) for _ in range(6)]
        current = rng.dirichlet(np.ones(4))
        window = filled_window(history)
        weights = dict(zip(self.cfg.lag_set, self.cfg.lag_weights))
        expected = sum(weights[lag] * jsd(current, history[-lag]) for lag in (1, 2, 4))
        self.assertAlmostEqual(divergence_signal(window, current, self.cfg), expected, places=12)

    def test_stability_identical_and_orthogonal(self):
        p = [np.array([0.5, 0.5])] * 4
        same = filled_window(p, features=[[1.0, 2.0, 3.0]] * 4)
        self.assertAlmostEqual(stability_signal(same, np.array([1.0, 2.0, 3.0]), self.cfg), 1.0)
        orthogonal = filled_window(p, features=[[0.0, 1.0, 0.0]] * 4)
        self.assertAlmostEqual(stability_signal(orthogonal, np.array([1.0, 0.0, 0.0]), self.cfg), 0.0)

    def test_stability_mixed_matches_oracle(self):
        rng = np.random.default_rng(5)
        feats = [rng.standard_normal(8) for _ in range(5)]
        current = rng.standard_normal(8)
        window = filled_window([np.array([0.5, 0.5])] * 5, features=feats)

        def naive(a, b):
            return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))

        expected = sum(naive(current, feats[-lag]) for lag in (1, 2, 4)) / 3
        self.assertAlmostEqual(stability_signal(window, current, self.cfg), expected, places=12)

    def test_stability_requires_features(self):
        window = filled_window([np.array([0.5, 0.5])])
        with self.assertRaises(FeaturesDisabledError):
            stability_signal(window, np.array([1.0]), self.cfg)

    def test_persistence(self):
        p = np.array([0.5, 0.5])
        window = filled_window([p] * 4, labels=[1, 1, 1, 1])
        self.assertEqual(persistence_signal(window, 1, self.cfg), 1.0)
        # lags 1, 2, 4 hold labels 0, 0, 1
        window = filled_window([p] * 4, labels=[1, 0, 0, 0])
        self.assertAlmostEqual(persistence_signal(window, 1, self.cfg), 1 / 3)

    def test_persistence_alternating_matches_indicator_sum(self):
        labels = [i % 2 for i in range(8)]
        window = filled_window([np.array([0.5, 0.5])] * 8, labels=labels)
        expected = sum(labels[-lag] == 1 for lag in (1, 2, 4)) / 3
        self.assertAlmostEqual(persistence_signal(window, 1, self.cfg), expected)

    def test_cold_start(self):
        """With an empty window s_t = [0, 0, 0, m_t]."""
        window = TemporalWindow(16, 3, 4)
        p = np.array([0.5, 0.3, 0.2])
        signals = compute_signals(window, p, np.ones(4), 0, self.cfg)
        self.assertEqual(signals.divergence, 0.0)
        self.assertEqual(signals.instability, 0.0)
        self.assertEqual(signals.inconsistency, 0.0)
        self.assertAlmostEqual(signals.proxy, confidence_proxy(p, 0.5))

    def test_compute_signals_without_features(self):
        window = filled_window([np.array([0.9, 0.1])] * 3)
        signals = compute_signals(window, np.array([0.1, 0.9]), None, 1, self.cfg)
        self.assertEqual(signals.instability, 0.0)
        self.assertEqual(signals.inconsistency, 1.0)
        self.assertGreater(signals.divergence, 0.0)

    def test_compute_signals_rejects_bad_feature(self):
        window = filled_window([np.array([0.9, 0.1])], features=[[1.0, 0.0]])
        with self.assertRaises(DimensionMismatchError):
            compute_signals(window, np.array([0.9, 0.1]), np.ones(3), 0, self.cfg)


class TestConfidenceProxy(unittest.TestCase):

    def test_one_hot(self):
        for blend in (0.0, 0.3, 1.0):
            self.assertEqual(confidence_proxy(np.array([0.0, 1.0, 0.0]), blend), 0.0)

    def test_uniform(self):
        self.assertAlmostEqual(confidence_proxy(np.full(10, 0.1), 0.5), 0.95)

    def test_blend_arithmetic(self):
        self.assertAlmostEqual(confidence_proxy(np.array([0.5, 0.4, 0.1]), 0.7), 0.62)

    def test_needs_two_classes(self):
        with self.assertRaises(ValueError):
            confidence_proxy(np.array([1.0]), 0.5)


class TestUncertaintyScore(unittest.TestCase):

    def test_zero_params(self):
        s = SignalVector(0.3, 0.2, 0.5, 0.9)
        self.assertEqual(uncertainty_score(s, CombinerParams.zero()), 0.5)

    def test_balanced_arithmetic(self):
        s = SignalVector(0.5, 0.5, 0.5, 0.5)
        params = CombinerParams(weights=(1.0, 1.0, 1.0, 1.0), bias=-2.0)
        self.assertEqual(uncertainty_score(s, params), 0.5)

    def test_monotone_in_positive_weight_components(self):
        rng = np.random.default_rng(7)
        upper = (math.log(2), 2.0, 1.0, 1.0)
        for _ in range(200):
            w = tuple(float(x) for x in rng.normal(0, 3, 4))
            params = CombinerParams(weights=w, bias=float(rng.normal(0, 2)))
            values = [float(rng.uniform(0, hi)) for hi in upper]
            before = uncertainty_score(SignalVector(*values), params)
            for k in range(4):
                if w[k] <= 0:
                    continue
                raised = list(values)
                raised[k] = float(rng.uniform(values[k], upper[k]))
                self.assertGreaterEqual(uncertainty_score(SignalVector(*raised), params), before)

    def test_matches_logistic_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            w = tuple(rng.normal(0, 3, 4))
            b = float(rng.normal(0, 3))
            values = [rng.uniform(0, math.log(2)), rng.uniform(0, 2), rng.uniform(0, 1), rng.uniform(0, 1)]
            s = SignalVector(*values)
            z = sum(wi * si for wi, si in zip(w, values)) + b
            expected = 1.0 / (1.0 + math.exp(-z))
            self.assertAlmostEqual(uncertainty_score(s, CombinerParams(weights=w, bias=b)), expected, delta=1e-12)


if __name__ == "__main__":
    unittest.main()
