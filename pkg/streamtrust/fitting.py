"""Offline fitting of the logistic combiner on a labeled development set."""

from dataclasses import dataclass, field

import numpy as np

from streamtrust.config import FitConfig
from streamtrust.errors import DegenerateDevSetError
from streamtrust.models import CombinerParams, DevExample


ARMIJO_C = 1e-4
MIN_STEP = 1e-20


@dataclass
class FitResult:
    """Fitted parameters plus optimizer diagnostics."""

    params: CombinerParams
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    gradient_norm: float = float("nan")


def design_matrix(examples: list[DevExample]) -> tuple[np.ndarray, np.ndarray]:
    """
    Stack examples into (X, y) in a canonical row order.

    Rows are sorted lexicographically so any permutation of the same examples
    yields the same arrays.

    Raises:
        ValueError: If any signal is not finite
    """
    X = np.array([ex.signals.as_array() for ex in examples], dtype=np.float64).reshape(-1, 4)
    y = np.array([1.0 if ex.misclassified else 0.0 for ex in examples], dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("development set contains non-finite signals")
    order = np.lexsort((y, X[:, 3], X[:, 2], X[:, 1], X[:, 0]))
    return X[order], y[order]


def class_weights(y: np.ndarray, class_balance: bool) -> np.ndarray:
    """Per-example weights n / (2 * n_c) when balancing, else ones."""
    if not class_balance:
        return np.ones_like(y)
    n = y.size
    n_pos = float(y.sum())
    n_neg = n - n_pos
    return np.where(y > 0.5, n / (2.0 * n_pos), n / (2.0 * n_neg))


def objective_and_gradient(
    theta: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """
    Weighted mean binary cross-entropy plus (l2 / 2) * ||w||^2.

    ``theta`` is [w_1..w_4, b]; the bias is not regularized.
    """
    w, b = theta[:4], theta[4]
    z = X @ w + b
    total_weight = float(sample_weights.sum())
    losses = np.logaddexp(0.0, z) - y * z
    objective = float(np.dot(sample_weights, losses)) / total_weight + 0.5 * l2 * float(np.dot(w, w))

    residual = sample_weights * (_sigmoid(z) - y) / total_weight
    grad = np.empty(5, dtype=np.float64)
    grad[:4] = X.T @ residual + l2 * w
    grad[4] = float(residual.sum())
    return objective, grad


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_combiner_detailed(examples: list[DevExample], cfg: FitConfig | None = None) -> FitResult:
    """
    Full-batch gradient descent with Armijo backtracking, started at zero.

    Raises:
        DegenerateDevSetError: If fewer than two examples or only one target class
        ValueError: If any signal is not finite
    """
    cfg = cfg or FitConfig()
    if len(examples) < 2:
        raise DegenerateDevSetError(f"degenerate development set: {len(examples)} example(s)")
    X, y = design_matrix(examples)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateDevSetError(
            "degenerate development set: all examples are "
            + ("misclassified" if n_pos else "correctly classified")
        )
    weights = class_weights(y, cfg.class_balance)

    theta = np.zeros(5, dtype=np.float64)
    objective, grad = objective_and_gradient(theta, X, y, weights, cfg.l2)
    result = FitResult(params=CombinerParams.zero(), objective_trace=[objective])
    step = 1.0
    for iteration in range(1, cfg.max_iters + 1):
        grad_sq = float(np.dot(grad, grad))
        if np.sqrt(grad_sq) < cfg.tol:
            result.converged = True
            break
        while True:
            candidate = theta - step * grad
            cand_obj, cand_grad = objective_and_gradient(candidate, X, y, weights, cfg.l2)
            if cand_obj <= objective - ARMIJO_C * step * grad_sq:
                break
            step *= 0.5
            if step < MIN_STEP:
                break
        if step < MIN_STEP:
            break
        theta, objective, grad = candidate, cand_obj, cand_grad
        result.objective_trace.append(objective)
        result.iterations = iteration
        step *= 2.0
    else:
        result.converged = bool(np.linalg.norm(grad) < cfg.tol)

    result.params = CombinerParams(weights=tuple(theta[:4]), bias=float(theta[4]))  # type: ignore[arg-type]
    result.gradient_norm = float(np.linalg.norm(grad))
    return result


def fit_combiner(examples: list[DevExample], cfg: FitConfig | None = None) -> CombinerParams:
    """Fit (w, b) predicting misclassification from the signal vector."""
    return fit_combiner_detailed(examples, cfg).params


def eval_combiner(
    params: CombinerParams,
    examples: list[DevExample],
    class_balance: bool = True,
) -> tuple[float, float]:
    """
    Class-weighted mean cross-entropy and 0.5-threshold accuracy.

    Falls back to unit weights when only one target class is present.
    """
    if not examples:
        raise ValueError("eval_combiner needs at least one example")
    X, y = design_matrix(examples)
    n_pos = int(y.sum())
    balance = class_balance and 0 < n_pos < y.size
    weights = class_weights(y, balance)
    z = X @ np.asarray(params.weights) + params.bias
    losses = np.logaddexp(0.0, z) - y * z
    log_loss = float(np.dot(weights, losses)) / float(weights.sum())
    predicted = (_sigmoid(z) >= 0.5).astype(np.float64)
    accuracy = float(np.mean(predicted == y))
    return log_loss, accuracy
