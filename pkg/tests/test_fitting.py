"""Tests for combiner fitting and the params file."""

import json
import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from streamtrust.config import FitConfig
from streamtrust.errors import DegenerateDevSetError
from streamtrust.fitting import (
    class_weights,
    design_matrix,
    eval_combiner,
    fit_combiner,
    fit_combiner_detailed,
    objective_and_gradient,
)
from streamtrust.models import CombinerParams, DevExample, SignalVector
from streamtrust.params import load_params, save_params


TRUE_WEIGHTS = np.array([4.0, 3.0, 2.0, 5.0])
TRUE_BIAS = -6.0


def random_signals(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.column_stack([
        rng.uniform(0.0, math.log(2), n),
        rng.uniform(0.0, 2.0, n),
        rng.uniform(0.0, 1.0, n),
        rng.uniform(0.0, 1.0, n),
    ])


def examples_from(X: np.ndarray, y: np.ndarray) -> list[DevExample]:
    return [DevExample(SignalVector.from_array(row), bool(label)) for row, label in zip(X, y)]


def known_model_examples(n: int, seed: int) -> list[DevExample]:
    rng = np.random.default_rng(seed)
    X = random_signals(rng, n)
    p = 1.0 / (1.0 + np.exp(-(X @ TRUE_WEIGHTS + TRUE_BIAS)))
    y = rng.random(n) < p
    return examples_from(X, y)


class TestObjective(unittest.TestCase):

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(30)
        X = random_signals(rng, 300)
        y = (rng.random(300) < 0.3).astype(float)
        weights = class_weights(y, True)
        h = 1e-6
        for _ in range(5):
            theta = rng.normal(0.0, 1.0, 5)
            _, grad = objective_and_gradient(theta, X, y, weights, 1e-3)
            numeric = np.zeros(5)
            for i in range(5):
                step = np.zeros(5)
                step[i] = h
                plus, _ = objective_and_gradient(theta + step, X, y, weights, 1e-3)
                minus, _ = objective_and_gradient(theta - step, X, y, weights, 1e-3)
                numeric[i] = (plus - minus) / (2 * h)
            rel = np.linalg.norm(numeric - grad) / np.linalg.norm(grad)
            self.assertLess(rel, 1e-5)

    def test_class_weights(self):
        y = np.array([1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(class_weights(y, True), [2.0, 4 / 6, 4 / 6, 4 / 6])
        np.testing.assert_array_equal(class_weights(y, False), np.ones(4))


class TestFitCombiner(unittest.TestCase):

    def test_recovers_known_model(self):
        examples = known_model_examples(20_000, seed=31)
        result = fit_combiner_detailed(examples, FitConfig(l2=1e-4, class_balance=False))
        fitted = np.array([*result.params.weights, result.params.bias])
        truth = np.array([*TRUE_WEIGHTS, TRUE_BIAS])
        np.testing.assert_array_less(np.abs(fitted - truth) / np.abs(truth), 0.15)

    def test_objective_decreases_monotonically(self):
        examples = known_model_examples(2000, seed=32)
        result = fit_combiner_detailed(examples)
        trace = np.array(result.objective_trace)
        self.assertGreater(len(trace), 1)
        self.assertTrue(np.all(np.diff(trace) <= 0.0))
        self.assertTrue(math.isfinite(result.gradient_norm))

    def test_separable_pattern(self):
        rng = np.random.default_rng(33)
        low = rng.uniform(0.0, 0.3, 100)
        high = rng.uniform(0.4, 0.69, 100)
        X = np.zeros((200, 4))
        X[:, 0] = np.concatenate([low, high])
        y = np.concatenate([np.zeros(100), np.ones(100)])
        examples = examples_from(X, y)
        params = fit_combiner(examples, FitConfig(l2=1e-4))
        self.assertTrue(all(math.isfinite(w) for w in params.weights))
        _, accuracy = eval_combiner(params, examples)
        self.assertEqual(accuracy, 1.0)

    def test_no_signal_predicts_half(self):
        rng = np.random.default_rng(34)
        X = random_signals(rng, 40_000)
        y = rng.random(40_000) < 0.2
        examples = examples_from(X, y)
        params = fit_combiner(examples, FitConfig(class_balance=True))
        z = X @ np.array(params.weights) + params.bias
        self.assertLess(float(np.max(np.abs(z))), 0.3)

    def test_degenerate_sets(self):
        rng = np.random.default_rng(35)
        X = random_signals(rng, 10)
        with self.assertRaises(DegenerateDevSetError):
            fit_combiner(examples_from(X, np.zeros(10)))
        with self.assertRaises(DegenerateDevSetError):
            fit_combiner(examples_from(X, np.ones(10)))
        with self.assertRaises(DegenerateDevSetError):
            fit_combiner(examples_from(X[:1], np.ones(1)))

    def test_order_invariant(self):
        examples = known_model_examples(500, seed=36)
        shuffled = list(examples)
        np.random.default_rng(37).shuffle(shuffled)
        self.assertEqual(fit_combiner(examples), fit_combiner(shuffled))

    def test_design_matrix_canonical_order(self):
        examples = known_model_examples(50, seed=38)
        X1, y1 = design_matrix(examples)
        X2, y2 = design_matrix(list(reversed(examples)))
        np.testing.assert_array_equal(X1, X2)
        np.testing.assert_array_equal(y1, y2)


class TestEvalCombiner(unittest.TestCase):

    def test_zero_params_on_balanced_set(self):
        rng = np.random.default_rng(39)
        X = random_signals(rng, 100)
        y = np.array([i % 2 for i in range(100)])
        log_loss, _ = eval_combiner(CombinerParams.zero(), examples_from(X, y))
        self.assertAlmostEqual(log_loss, math.log(2), places=12)

    def test_fit_improves_on_zero_model(self):
        examples = known_model_examples(1000, seed=40)
        fitted, _ = eval_combiner(fit_combiner(examples), examples)
        zero, _ = eval_combiner(CombinerParams.zero(), examples)
        self.assertLessEqual(fitted, zero)

    def test_close_to_generating_model(self):
        examples = known_model_examples(20_000, seed=41)
        fitted = fit_combiner(examples, FitConfig(class_balance=False))
        truth = CombinerParams(weights=tuple(TRUE_WEIGHTS), bias=TRUE_BIAS)
        fitted_loss, _ = eval_combiner(fitted, examples, class_balance=False)
        true_loss, _ = eval_combiner(truth, examples, class_balance=False)
        self.assertLessEqual(abs(fitted_loss - true_loss), 0.05 * true_loss)

    def test_empty(self):
        with self.assertRaises(ValueError):
            eval_combiner(CombinerParams.zero(), [])


class TestParamsFile(unittest.TestCase):

    def test_round_trip_and_deterministic_bytes(self):
        params = CombinerParams(weights=(0.1, -2.5, 3.0, 1e-7), bias=-1.25)
        with tempfile.TemporaryDirectory() as tmpdir:
            a = save_params(Path(tmpdir) / "a.json", params, {"log_loss": 0.4})
            b = save_params(Path(tmpdir) / "b.json", params, {"log_loss": 0.4})
            self.assertEqual(a.read_bytes(), b.read_bytes())
            self.assertEqual(load_params(a), params)
            data = json.loads(a.read_text())
            self.assertEqual(data["diagnostics"], {"log_loss": 0.4})

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_params("/nonexistent/params.json")

    def test_invalid_contents(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "p.json"
            for text in ("not json", '{"weights": [1, 2, 3]}', '{"weights": [1, 2, 3], "bias": 0}',
                         '{"weights": [1, 2, 3, NaN], "bias": 0}', '{"weights": [1, 2, 3, 4], "bias": "x"}'):
                with self.subTest(text=text):
                    path.write_text(text)
                    with self.assertRaises(ValueError):
                        load_params(path)


if __name__ == "__main__":
    unittest.main()
