"""Online-calibration metrics: exceedance deviation, budget adherence, threshold stability."""

from typing import Sequence

import numpy as np

from streamtrust.errors import AlignmentError
from streamtrust.models import Decision


def exceedance_deviation(scores: Sequence[float], quantiles: Sequence[float], alpha: float) -> float:
    """
    |mean(1[r_t >= q_t]) - alpha|.

    Raises:
        AlignmentError: If the series differ in length
        ValueError: If the series are empty
    """
    r = np.asarray(scores, dtype=np.float64)
    q = np.asarray(quantiles, dtype=np.float64)
    if r.shape != q.shape:
        raise AlignmentError(f"{r.size} scores for {q.size} quantiles")
    if r.size == 0:
        raise ValueError("exceedance deviation needs a nonempty series")
    return abs(float(np.mean(r >= q)) - alpha)


def abstain_flags(decisions: Sequence[Decision]) -> np.ndarray:
    return np.array([d.abstained for d in decisions], dtype=bool)


def budget_adherence(decisions: Sequence[Decision], budget: float, burst_window: int) -> tuple[float, float]:
    """
    Long-run deviation |b_hat - b| and the worst abstain fraction of any
    ``burst_window``-step window (the whole series if it is shorter).
    """
    if not decisions:
        raise ValueError("budget adherence needs a nonempty decision series")
    if burst_window < 1:
        raise ValueError(f"burst_window must be positive, got {burst_window}")
    flags = abstain_flags(decisions).astype(np.float64)
    longrun = abs(float(flags.mean()) - budget)
    if flags.size <= burst_window:
        return longrun, float(flags.mean())
    sums = np.convolve(flags, np.ones(burst_window), mode="valid")
    return longrun, float(sums.max()) / burst_window


def quantile_stability(quantiles: Sequence[float]) -> float:
    """Standard deviation of the threshold over the given steps."""
    q = np.asarray(quantiles, dtype=np.float64)
    if q.size == 0:
        raise ValueError("quantile stability needs a nonempty series")
    return float(q.std())
