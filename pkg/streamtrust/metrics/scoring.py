"""Proper scores, calibration error and failure-detection curves."""

from typing import Sequence

import numpy as np
from sklearn.metrics import auc, f1_score, roc_auc_score, roc_curve

from streamtrust.errors import AlignmentError
from streamtrust.models import Decision


NLL_FLOOR = 1e-12


def _aligned(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if len(a) != len(b):
        raise AlignmentError(f"{what}: series lengths differ ({len(a)} vs {len(b)})")


def brier(posteriors: np.ndarray | Sequence[np.ndarray], labels: Sequence[int]) -> float:
    """Mean over examples of sum_l (p_l - 1[y = l])^2."""
    P = np.asarray(posteriors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    _aligned(P, y, "brier")
    if P.size == 0:
        raise ValueError("brier needs at least one example")
    target = np.zeros_like(P)
    target[np.arange(len(y)), y] = 1.0
    return float(np.mean(np.sum((P - target) ** 2, axis=1)))


def nll(posteriors: np.ndarray | Sequence[np.ndarray], labels: Sequence[int]) -> float:
    """Mean negative log-probability of the true label, floored at 1e-12."""
    P = np.asarray(posteriors, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    _aligned(P, y, "nll")
    if P.size == 0:
        raise ValueError("nll needs at least one example")
    p_true = np.maximum(P[np.arange(len(y)), y], NLL_FLOOR)
    return float(-np.mean(np.log(p_true)))


def macro_f1(labels: Sequence[int], predictions: Sequence[int]) -> float:
    """Unweighted mean of per-class F1 over the classes present in either series."""
    y = np.asarray(labels, dtype=np.int64)
    yhat = np.asarray(predictions, dtype=np.int64)
    _aligned(y, yhat, "macro_f1")
    if y.size == 0:
        raise ValueError("macro_f1 needs at least one example")
    return float(f1_score(y, yhat, average="macro", zero_division=0))


def ece(confidences: Sequence[float], correct: Sequence[bool], bins: int = 15) -> float:
    """
    Expected calibration error over equal-width bins (lower, upper].

    A confidence of exactly 0 falls in the first bin; empty bins contribute 0.
    """
    if bins < 1:
        raise ValueError(f"ece needs at least one bin, got {bins}")
    c = np.asarray(confidences, dtype=np.float64)
    ok = np.asarray(correct, dtype=np.float64)
    _aligned(c, ok, "ece")
    if c.size == 0:
        raise ValueError("ece needs at least one example")
    index = np.clip(np.ceil(c * bins).astype(np.int64) - 1, 0, bins - 1)
    total = 0.0
    n = c.size
    for m in range(bins):
        in_bin = index == m
        count = int(in_bin.sum())
        if count:
            total += (count / n) * abs(float(ok[in_bin].mean()) - float(c[in_bin].mean()))
    return total


def _check_binary(positives: np.ndarray) -> tuple[int, int]:
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both positive and negative examples are required")
    return n_pos, n_neg


def auroc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """
    Probability that a random positive outscores a random negative (ties count 1/2).

    Raises:
        ValueError: If only one label value is present
    """
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels, dtype=bool)
    _aligned(s, pos, "auroc")
    _check_binary(pos)
    return float(roc_auc_score(pos, s))


def roc_points(scores: Sequence[float], labels: Sequence[bool]) -> list[tuple[float, float, float]]:
    """(threshold, fpr, tpr) for 'score >= threshold', starting at (inf, 0, 0)."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels, dtype=bool)
    _aligned(s, pos, "roc")
    _check_binary(pos)
    fpr, tpr, thresholds = roc_curve(pos, s, drop_intermediate=False)
    points = [(float("inf"), 0.0, 0.0)]
    points.extend((float(t), float(x), float(y)) for t, x, y in zip(thresholds[1:], fpr[1:], tpr[1:]))
    return points


def roc_area(points: list[tuple[float, float, float]]) -> float:
    return float(auc([p[1] for p in points], [p[2] for p in points]))


def precision_recall_points(scores: Sequence[float], labels: Sequence[bool]) -> list[tuple[float, float, float]]:
    """
    (threshold, recall, precision) for 'score >= threshold'.

    The curve starts at the anchor (inf, recall 0, precision 1).
    """
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(labels, dtype=bool)
    _aligned(s, pos, "precision-recall")
    n_pos, _ = _check_binary(pos)
    points = [(float("inf"), 0.0, 1.0)]
    for thr in np.unique(s)[::-1]:
        predicted = s >= thr
        tp = int(np.sum(predicted & pos))
        n_pred = int(predicted.sum())
        points.append((float(thr), tp / n_pos, tp / n_pred))
    return points


def pr_area(points: list[tuple[float, float, float]]) -> float:
    """Trapezoidal area under (recall, precision) points ordered by recall."""
    recall = np.array([p[1] for p in points])
    precision = np.array([p[2] for p in points])
    return float(np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0))


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Failure-detection AUPRC where a higher score predicts a failure."""
    return pr_area(precision_recall_points(scores, labels))


def selective_risk(decisions: Sequence[Decision], correct: Sequence[bool | None]) -> tuple[float, float]:
    """
    Coverage and error rate among accepted, labeled steps.

    Returns:
        (coverage, risk); risk is 0 when nothing labeled was accepted
    """
    _aligned(np.arange(len(decisions)), np.arange(len(correct)), "selective risk")
    if not decisions:
        raise ValueError("selective_risk needs at least one decision")
    accepted = [not d.abstained for d in decisions]
    coverage = sum(accepted) / len(decisions)
    scored = [ok for acc, ok in zip(accepted, correct) if acc and ok is not None]
    risk = (scored.count(False) / len(scored)) if scored else 0.0
    return coverage, risk
