"""Offline evaluation metrics."""

from streamtrust.metrics.detection import (
    DropSweep,
    EventCounts,
    IDBand,
    SlidingStats,
    auprc,
    correctness,
    detection_delays,
    drop_sweep,
    event_series,
    id_band,
    label_events,
    pooled_drop_sweep,
    pr_curve,
    sliding_series,
)
from streamtrust.metrics.scoring import (
    auroc,
    average_precision,
    brier,
    ece,
    macro_f1,
    nll,
    precision_recall_points,
    roc_area,
    roc_points,
    selective_risk,
)
from streamtrust.metrics.streaming import budget_adherence, exceedance_deviation, quantile_stability

__all__ = [
    "DropSweep",
    "EventCounts",
    "IDBand",
    "SlidingStats",
    "auprc",
    "auroc",
    "average_precision",
    "brier",
    "budget_adherence",
    "correctness",
    "detection_delays",
    "drop_sweep",
    "ece",
    "event_series",
    "exceedance_deviation",
    "id_band",
    "label_events",
    "macro_f1",
    "nll",
    "pooled_drop_sweep",
    "pr_curve",
    "precision_recall_points",
    "quantile_stability",
    "roc_area",
    "roc_points",
    "selective_risk",
    "sliding_series",
]
