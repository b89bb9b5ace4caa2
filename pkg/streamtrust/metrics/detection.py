"""Sliding-window accuracy-drop detection: ASW/CSW, event labeling and AUPRC."""

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from streamtrust.errors import AlignmentError, NoDropEventsError
from streamtrust.models import StreamRecord


BAND_WIDTH = 3.0


@dataclass(frozen=True)
class IDBand:
    """Mean and standard deviation of the ID sliding-window accuracy."""

    mu_id: float
    sigma_id: float

    def __post_init__(self) -> None:
        if self.sigma_id < 0:
            raise ValueError(f"sigma_id must be >= 0, got {self.sigma_id}")

    @property
    def drop_threshold(self) -> float:
        """ASW at or below this marks a drop event."""
        return self.mu_id - BAND_WIDTH * self.sigma_id


@dataclass(frozen=True)
class EventCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 1.0

    @property
    def recall(self) -> float:
        events = self.tp + self.fn
        return self.tp / events if events else 0.0


def correctness(records: Iterable[StreamRecord]) -> list[bool | None]:
    """Per-step correctness; None for OOD and unlabeled steps."""
    return [r.correct for r in records]


class SlidingStats:
    """
    Moving accuracy over the last m labeled predictions (ASW) and moving
    confidence over the last m steps (CSW).

    OOD and unlabeled steps leave ASW untouched but still enter CSW.
    """

    def __init__(self, window_m: int):
        if window_m < 1:
            raise ValueError(f"window_m must be positive, got {window_m}")
        self.window_m = window_m
        self._acc: deque[float] = deque(maxlen=window_m)
        self._conf: deque[float] = deque(maxlen=window_m)
        self._acc_sum = 0.0
        self._conf_sum = 0.0

    @staticmethod
    def _push(buf: deque[float], total: float, value: float) -> float:
        if len(buf) == buf.maxlen:
            total -= buf[0]
        buf.append(value)
        return total + value

    def update(self, correct: bool | None, confidence: float) -> None:
        if correct is not None:
            self._acc_sum = self._push(self._acc, self._acc_sum, 1.0 if correct else 0.0)
        self._conf_sum = self._push(self._conf, self._conf_sum, confidence)

    @property
    def asw(self) -> float | None:
        if len(self._acc) < self.window_m:
            return None
        return min(max(self._acc_sum / self.window_m, 0.0), 1.0)

    @property
    def csw(self) -> float | None:
        if len(self._conf) < self.window_m:
            return None
        return min(max(self._conf_sum / self.window_m, 0.0), 1.0)


def sliding_series(
    correct: Sequence[bool | None],
    confidences: Sequence[float],
    window_m: int,
) -> tuple[np.ndarray, np.ndarray]:
    """ASW and CSW per step, NaN where fewer than m samples have been seen."""
    if len(correct) != len(confidences):
        raise AlignmentError(
            f"stream has {len(correct)} steps but {len(confidences)} confidence values"
        )
    stats = SlidingStats(window_m)
    asw = np.full(len(correct), np.nan)
    csw = np.full(len(correct), np.nan)
    for t, (ok, conf) in enumerate(zip(correct, confidences)):
        stats.update(ok, conf)
        if stats.asw is not None:
            asw[t] = stats.asw
        if stats.csw is not None:
            csw[t] = stats.csw
    return asw, csw


def id_band(correct: Sequence[bool | None], window_m: int) -> IDBand:
    """
    Band of the ID ASW series from step m onward.

    Raises:
        ValueError: If the stream is not longer than m or ASW never becomes defined
    """
    if len(correct) <= window_m:
        raise ValueError(f"ID stream needs more than {window_m} steps, got {len(correct)}")
    asw, _ = sliding_series(correct, [0.0] * len(correct), window_m)
    values = asw[window_m:]
    values = values[~np.isnan(values)]
    if values.size == 0:
        raise ValueError(f"ID stream has fewer than {window_m} labeled steps")
    return IDBand(mu_id=float(values.mean()), sigma_id=float(values.std()))


def scored_mask(asw: np.ndarray, csw: np.ndarray, window_m: int) -> np.ndarray:
    """Steps with index >= m where both ASW and CSW are defined."""
    scored = np.zeros(asw.size, dtype=bool)
    scored[window_m:] = True
    return scored & ~np.isnan(asw) & ~np.isnan(csw)


def event_series(
    correct: Sequence[bool | None],
    confidences: Sequence[float],
    band: IDBand,
    window_m: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    CSW values and drop-event flags for every scored step.

    Returns:
        (csw, events, scored) where csw and events cover the scored steps only
        and ``scored`` is the boolean mask over the whole stream
    """
    asw, csw = sliding_series(correct, confidences, window_m)
    scored = scored_mask(asw, csw, window_m)
    events = asw[scored] <= band.drop_threshold
    return csw[scored], events, scored


def label_events(
    correct: Sequence[bool | None],
    band: IDBand,
    window_m: int,
    rho: float,
    confidences: Sequence[float],
) -> EventCounts:
    """
    Classify scored steps: TP (CSW < rho, drop), FP (CSW < rho, no drop),
    TN (CSW >= rho, no drop), FN (CSW >= rho, drop).

    Raises:
        AlignmentError: If the confidence series is not aligned with the stream
    """
    csw, events, _ = event_series(correct, confidences, band, window_m)
    alarm = csw < rho
    return EventCounts(
        tp=int(np.sum(alarm & events)),
        fp=int(np.sum(alarm & ~events)),
        tn=int(np.sum(~alarm & ~events)),
        fn=int(np.sum(~alarm & events)),
    )


class DropSweep:
    """
    Callable rho -> (precision, recall) over precomputed CSW values.

    Sorted arrays make each evaluation O(log n). Precision is 1 when
    nothing is predicted.
    """

    def __init__(self, csw: np.ndarray, events: np.ndarray):
        csw = np.asarray(csw, dtype=np.float64)
        events = np.asarray(events, dtype=bool)
        if csw.shape != events.shape:
            raise AlignmentError(f"{csw.size} CSW values for {events.size} event flags")
        self.n_events = int(events.sum())
        if self.n_events == 0:
            raise NoDropEventsError("no drop events to detect")
        self._all = np.sort(csw)
        self._events = np.sort(csw[events])

    def __call__(self, rho: float) -> tuple[float, float]:
        predicted = int(np.searchsorted(self._all, rho, side="left"))
        tp = int(np.searchsorted(self._events, rho, side="left"))
        precision = tp / predicted if predicted else 1.0
        return precision, tp / self.n_events

    @property
    def thresholds(self) -> np.ndarray:
        """Unique CSW values, the endpoints 0 and 1, and one value above the maximum."""
        top = float(self._all[-1]) if self._all.size else 1.0
        grid = np.concatenate([self._all, [0.0, 1.0, np.nextafter(max(top, 1.0), np.inf)]])
        return np.unique(grid)


def drop_sweep(csw: np.ndarray, events: np.ndarray) -> DropSweep:
    return DropSweep(csw, events)


def pooled_drop_sweep(replicas: Iterable[tuple[np.ndarray, np.ndarray]]) -> DropSweep:
    """Pool (csw, events) pairs from several streams into one sweep."""
    pairs = list(replicas)
    if not pairs:
        raise NoDropEventsError("no drop events to detect")
    csw = np.concatenate([np.asarray(c, dtype=np.float64) for c, _ in pairs])
    events = np.concatenate([np.asarray(e, dtype=bool) for _, e in pairs])
    return DropSweep(csw, events)


def pr_curve(sweep: DropSweep, thresholds: Iterable[float] | None = None) -> list[tuple[float, float, float]]:
    """(rho, recall, precision) over ascending thresholds, preceded by the (0, 1) anchor."""
    grid = np.unique(np.asarray(list(thresholds), dtype=np.float64)) if thresholds is not None else sweep.thresholds
    points = [(float("-inf"), 0.0, 1.0)]
    for rho in grid:
        precision, recall = sweep(float(rho))
        points.append((float(rho), recall, precision))
    return points


def auprc(sweep: DropSweep, thresholds: Iterable[float] | None = None) -> float:
    """
    Area under the precision-recall curve, trapezoidal over recall.

    Raises:
        NoDropEventsError: If the stream has no drop events (raised when the sweep is built)
    """
    points = pr_curve(sweep, thresholds)
    recall = np.array([p[1] for p in points])
    precision = np.array([p[2] for p in points])
    area = float(np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0))
    return min(max(area, 0.0), 1.0)


def detection_delays(events: Sequence[bool], alarms: Sequence[bool]) -> tuple[float | None, int, int]:
    """
    Delay from each event onset to the first alarm inside the same event run.

    Returns:
        (median delay in steps or None if nothing was detected, missed events, total events)
    """
    if len(events) != len(alarms):
        raise AlignmentError(f"{len(events)} event flags for {len(alarms)} alarm flags")
    delays: list[int] = []
    missed = 0
    total = 0
    t = 0
    n = len(events)
    while t < n:
        if not events[t]:
            t += 1
            continue
        onset = t
        total += 1
        detected = None
        while t < n and events[t]:
            if detected is None and alarms[t]:
                detected = t - onset
            t += 1
        if detected is None:
            missed += 1
        else:
            delays.append(detected)
    median = float(np.median(delays)) if delays else None
    return median, missed, total
