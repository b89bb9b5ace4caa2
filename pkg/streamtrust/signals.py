"""Temporal-consistency signals and their logistic aggregation."""

from typing import Callable, TypeVar

import numpy as np

from streamtrust.config import SignalConfig
from streamtrust.errors import DimensionMismatchError, FeaturesDisabledError
from streamtrust.models import LN2, CombinerParams, SignalVector
from streamtrust.window import TemporalWindow


E = TypeVar("E")


def _smooth(p: np.ndarray, epsilon: float) -> np.ndarray:
    return (p + epsilon) / (1.0 + p.size * epsilon)


def _kl_to_mixture(p: np.ndarray, m: np.ndarray) -> float:
    # zero-probability entries contribute nothing
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / m[mask])))


def jsd(p: np.ndarray, q: np.ndarray, epsilon: float = 1e-6) -> float:
    """
    Jensen-Shannon divergence (natural log) between two smoothed posteriors.

    Each input is smoothed as (p + eps) / (1 + L * eps) first. The result
    lies in [0, ln 2] and is symmetric in its arguments.

    Raises:
        DimensionMismatchError: If the vectors differ in length
        ValueError: If either vector contains NaN
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatchError(f"posterior lengths differ: {p.size} vs {q.size}")
    if np.isnan(p).any() or np.isnan(q).any():
        raise ValueError("jsd input contains NaN")
    ps = _smooth(p, epsilon)
    qs = _smooth(q, epsilon)
    m = 0.5 * (ps + qs)
    value = 0.5 * (_kl_to_mixture(ps, m) + _kl_to_mixture(qs, m))
    return min(max(value, 0.0), LN2)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; a zero vector has similarity 0 with anything."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(max(float(np.dot(a, b)) / (na * nb), -1.0), 1.0)


def temporal_signals(
    entries: list[tuple[int, E]],
    cfg: SignalConfig,
    divergence: Callable[[E], float],
    similarity: Callable[[E], float] | None,
    current_label: int,
    label_of: Callable[[E], int],
) -> tuple[float, float, float]:
    """
    Fold the lagged entries into (D_t, S_t, c_t) in a single pass.

    ``entries`` holds (lag, entry) pairs for the available lags only.
    Divergence weights are renormalized over those lags; S_t and c_t use
    equal weights. With no history the neutral values (0, 1, 1) are returned.
    """
    if not entries:
        return 0.0, 1.0, 1.0

    weights = dict(zip(cfg.lag_set, cfg.lag_weights))  # type: ignore[arg-type]
    weight_total = 0.0
    weighted_div = 0.0
    sim_total = 0.0
    matches = 0
    for lag, entry in entries:
        w = weights[lag]
        weight_total += w
        weighted_div += w * divergence(entry)
        if similarity is not None:
            sim_total += similarity(entry)
        if label_of(entry) == current_label:
            matches += 1

    k = len(entries)
    d = weighted_div / weight_total if weight_total > 0.0 else 0.0
    s = sim_total / k if similarity is not None else 1.0
    return d, s, matches / k


def _lagged(window: TemporalWindow, cfg: SignalConfig) -> list:
    return [(lag, window.lag(lag)) for lag in window.available_lags(cfg.lag_set)]


def divergence_signal(window: TemporalWindow, current_posterior: np.ndarray, cfg: SignalConfig) -> float:
    """Multi-lag JSD between the current posterior and the buffered ones."""
    current = np.asarray(current_posterior, dtype=np.float64)
    d, _, _ = temporal_signals(
        _lagged(window, cfg), cfg,
        divergence=lambda e: jsd(current, e.posterior, cfg.epsilon),
        similarity=None,
        current_label=-1,
        label_of=lambda e: e.predicted_label,
    )
    return d


def stability_signal(window: TemporalWindow, current_feature: np.ndarray, cfg: SignalConfig) -> float:
    """
    Mean cosine similarity between the current and lagged features.

    Raises:
        FeaturesDisabledError: If the window was built without features
    """
    if not window.has_features:
        raise FeaturesDisabledError("feature stability requires a window with features")
    current = np.asarray(current_feature, dtype=np.float64)
    if current.shape != (window.feature_dim,):
        raise DimensionMismatchError(
            f"feature has length {current.size}, expected {window.feature_dim}"
        )
    _, s, _ = temporal_signals(
        _lagged(window, cfg), cfg,
        divergence=lambda e: 0.0,
        similarity=lambda e: cosine(current, e.feature),
        current_label=-1,
        label_of=lambda e: e.predicted_label,
    )
    return s


def persistence_signal(window: TemporalWindow, current_label: int, cfg: SignalConfig) -> float:
    """Fraction of available lags whose predicted label equals the current one."""
    _, _, c = temporal_signals(
        _lagged(window, cfg), cfg,
        divergence=lambda e: 0.0,
        similarity=None,
        current_label=current_label,
        label_of=lambda e: e.predicted_label,
    )
    return c


def confidence_proxy(posterior: np.ndarray, blend: float) -> float:
    """Blend of inverse confidence and inverse top-1/top-2 margin."""
    posterior = np.asarray(posterior, dtype=np.float64)
    if posterior.size < 2:
        raise ValueError("confidence proxy needs at least two classes")
    if not 0.0 <= blend <= 1.0:
        raise ValueError(f"proxy blend must be in [0, 1], got {blend}")
    top2 = np.partition(posterior, -2)[-2:]
    confidence = float(top2[1])
    margin = float(top2[1] - top2[0])
    value = blend * (1.0 - confidence) + (1.0 - blend) * (1.0 - margin)
    return min(max(value, 0.0), 1.0)


def sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + float(np.exp(-z)))
    ez = float(np.exp(z))
    return ez / (1.0 + ez)


def uncertainty_score(signals: SignalVector, params: CombinerParams) -> float:
    """U_t = sigmoid(w . s_t + b)."""
    z = float(np.dot(np.asarray(params.weights), signals.as_array())) + params.bias
    return sigmoid(z)


def compute_signals(
    window: TemporalWindow,
    posterior: np.ndarray,
    feature: np.ndarray | None,
    predicted_label: int,
    cfg: SignalConfig,
) -> SignalVector:
    """
    Build s_t = [D_t, 1 - S_t, 1 - c_t, m_t] for the current step.

    The window must not yet contain the current step. Without features the
    instability slot is fixed to 0.
    """
    current = np.asarray(posterior, dtype=np.float64)
    current_feature = None
    if window.has_features:
        if feature is None:
            raise DimensionMismatchError("window expects a feature vector, got none")
        current_feature = np.asarray(feature, dtype=np.float64)
        if current_feature.shape != (window.feature_dim,):
            raise DimensionMismatchError(
                f"feature has length {current_feature.size}, expected {window.feature_dim}"
            )

    d, s, c = temporal_signals(
        _lagged(window, cfg), cfg,
        divergence=lambda e: jsd(current, e.posterior, cfg.epsilon),
        similarity=(lambda e: cosine(current_feature, e.feature)) if current_feature is not None else None,
        current_label=predicted_label,
        label_of=lambda e: e.predicted_label,
    )
    return SignalVector(
        divergence=d,
        instability=min(max(1.0 - s, 0.0), 2.0),
        inconsistency=1.0 - c,
        proxy=confidence_proxy(current, cfg.proxy_blend),
    )
