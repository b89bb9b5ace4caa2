"""Streaming conformal threshold and budget-aware accept/abstain policy."""

import bisect
import math
from collections import deque
from dataclasses import dataclass, field

from streamtrust.config import CalibConfig
from streamtrust.models import Decision


# scores closer than this to the first score count as "no spread yet"
DEGENERATE_SPREAD = 1e-9
_UNIT_TOLERANCE = 1e-12


def nonconformity(uncertainty: float, confidence: float, lambda_: float) -> float:
    """
    r_t = lambda * U_t + (1 - lambda) * (1 - C_t).

    Raises:
        ValueError: If any input lies outside [0, 1]
    """
    for name, value in (("uncertainty", uncertainty), ("confidence", confidence), ("lambda", lambda_)):
        if not (-_UNIT_TOLERANCE <= value <= 1.0 + _UNIT_TOLERANCE):
            raise ValueError(f"{name} must be in [0, 1], got {value}")
    r = lambda_ * uncertainty + (1.0 - lambda_) * (1.0 - confidence)
    return min(max(r, 0.0), 1.0)


def nearest_rank_quantile(sorted_scores: list[float], risk_level: float) -> float:
    """The ceil((1 - alpha) * n)-th smallest score."""
    n = len(sorted_scores)
    rank = math.ceil((1.0 - risk_level) * n - 1e-9)
    rank = min(max(rank, 1), n)
    return sorted_scores[rank - 1]


class QuantileTracker:
    """
    Online (1 - alpha) quantile with constant memory after warm-up.

    During warm-up the estimate is the nearest-rank empirical quantile of the
    scores seen so far. Afterwards the warm-up buffer is dropped and the
    estimate follows q <- q + eta * (1[r > q] - alpha), clamped to [0, 1].
    """

    def __init__(self, risk_level: float, step: float, warmup_steps: int, initial: float = 1.0):
        self.risk_level = risk_level
        self.step = step
        self.warmup_steps = warmup_steps
        self.q = initial
        self.updates = 0
        self._warmup: list[float] | None = []

    @property
    def warmed(self) -> bool:
        return self._warmup is None

    @property
    def warmup_size(self) -> int:
        return len(self._warmup) if self._warmup is not None else 0

    def update(self, r: float) -> float:
        if self._warmup is not None:
            bisect.insort(self._warmup, r)
            self.q = nearest_rank_quantile(self._warmup, self.risk_level)
            if len(self._warmup) >= self.warmup_steps:
                self._warmup = None
        else:
            exceed = 1.0 if r > self.q else 0.0
            self.q = min(max(self.q + self.step * (exceed - self.risk_level), 0.0), 1.0)
        self.updates += 1
        return self.q

    @property
    def nbytes(self) -> int:
        return 8 * (4 + self.warmup_size)


class FixedThreshold:
    """Constant 1 - alpha threshold with the same warm-up contract as QuantileTracker."""

    def __init__(self, risk_level: float, warmup_steps: int):
        self.risk_level = risk_level
        self.warmup_steps = warmup_steps
        self.q = 1.0 - risk_level
        self.updates = 0

    @property
    def warmed(self) -> bool:
        return self.updates >= self.warmup_steps

    def update(self, r: float) -> float:
        self.updates += 1
        return self.q

    @property
    def nbytes(self) -> int:
        return 8 * 3


def quantile_update(tracker: QuantileTracker, r: float, risk_level: float | None = None) -> QuantileTracker:
    if risk_level is not None and risk_level != tracker.risk_level:
        raise ValueError(f"tracker was built for alpha={tracker.risk_level}, got {risk_level}")
    tracker.update(r)
    return tracker


@dataclass
class BudgetController:
    """Running abstention bookkeeping with a burst allowance."""

    budget: float
    burst_window: int
    abstain_count: int = 0
    step_count: int = 0
    recent: deque[bool] = field(init=False)
    recent_abstains: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        # the allowance looks at the last burst_window - 1 decisions so that
        # every burst_window consecutive candidates contain one abstention
        self.recent = deque(maxlen=max(self.burst_window - 1, 0))

    def allows(self) -> bool:
        if (self.abstain_count + 1) / (self.step_count + 1) <= self.budget:
            return True
        return self.recent_abstains == 0

    def record(self, abstained: bool) -> None:
        if self.recent.maxlen:
            if len(self.recent) == self.recent.maxlen and self.recent[0]:
                self.recent_abstains -= 1
            self.recent.append(abstained)
            if abstained:
                self.recent_abstains += 1
        self.step_count += 1
        if abstained:
            self.abstain_count += 1

    @property
    def abstain_rate(self) -> float:
        return self.abstain_count / self.step_count if self.step_count else 0.0

    @property
    def nbytes(self) -> int:
        return 8 * 4 + (self.recent.maxlen or 0)


def budget_allows(controller: BudgetController, budget: float | None = None, burst_window: int | None = None) -> bool:
    if budget is not None and budget != controller.budget:
        raise ValueError(f"controller was built for budget={controller.budget}, got {budget}")
    if burst_window is not None and burst_window != controller.burst_window:
        raise ValueError(f"controller was built for burst_window={controller.burst_window}, got {burst_window}")
    return controller.allows()


class MonitorState:
    """
    Threshold tracker, budget controller and score-spread guard for one stream.

    ``decide`` must run before ``update`` for the same step so the threshold
    only reflects earlier scores.
    """

    def __init__(self, cfg: CalibConfig, fixed_threshold: bool = False):
        self.cfg = cfg
        self.tracker: QuantileTracker | FixedThreshold = (
            FixedThreshold(cfg.risk_level, cfg.warmup_steps)
            if fixed_threshold
            else QuantileTracker(cfg.risk_level, cfg.quantile_step, cfg.warmup_steps)
        )
        self.controller = BudgetController(cfg.budget, cfg.burst_window)
        self._first_score: float | None = None
        self._spread = False

    @property
    def warmed(self) -> bool:
        return self.tracker.warmed

    @property
    def quantile(self) -> float:
        return self.tracker.q

    def _has_spread(self, r: float) -> bool:
        if self._spread:
            return True
        if self._first_score is None:
            return False
        # a constant score at or above 1 - alpha is saturated, not degenerate
        if self._first_score >= 1.0 - self.cfg.risk_level:
            return True
        return abs(r - self._first_score) > DEGENERATE_SPREAD

    def decide(self, r: float, predicted_label: int) -> Decision:
        q = self.tracker.q
        abstain = (
            self.tracker.warmed
            and self._has_spread(r)
            and r >= q
            and self.controller.allows()
        )
        self.controller.record(abstain)
        if abstain:
            return Decision.abstain(score=r, quantile=q)
        return Decision.accept(label=predicted_label, score=r, quantile=q)

    def update(self, r: float) -> None:
        if self._first_score is None:
            self._first_score = r
        elif not self._spread and abs(r - self._first_score) > DEGENERATE_SPREAD:
            self._spread = True
        self.tracker.update(r)

    def observe(self, r: float, predicted_label: int) -> Decision:
        """Decide with the threshold from earlier steps, then fold r in."""
        decision = self.decide(r, predicted_label)
        self.update(r)
        return decision

    @property
    def nbytes(self) -> int:
        return self.tracker.nbytes + self.controller.nbytes + 16


def decide(state: MonitorState, r: float, predicted_label: int, cfg: CalibConfig | None = None) -> Decision:
    if cfg is not None and cfg is not state.cfg and cfg != state.cfg:
        raise ValueError("decide called with a config different from the state's")
    return state.decide(r, predicted_label)
