"""The online loop: signals, uncertainty, nonconformity and the accept/abstain decision."""

from enum import Enum
from typing import Iterable, Iterator, Sequence

from streamtrust.config import Config, SignalConfig
from streamtrust.conformal import MonitorState, nonconformity
from streamtrust.errors import AlignmentError, DimensionMismatchError
from streamtrust.models import CombinerParams, DevExample, MonitorStep, SignalVector, StreamRecord
from streamtrust.quantized import LogLUT, QuantizedWindow, compute_signals_quantized
from streamtrust.signals import compute_signals, uncertainty_score
from streamtrust.window import TemporalWindow


class MonitorVariant(str, Enum):
    """Full monitor and its ablations."""

    FULL = "full"
    NO_TEMPORAL = "no_temporal"  # only the instantaneous proxy enters U_t
    NO_CONFORMAL = "no_conformal"  # fixed 1 - alpha threshold
    MAXPROB = "maxprob"  # r_t = 1 - C_t

    @classmethod
    def parse(cls, value: str) -> "MonitorVariant":
        try:
            return cls(str(value).lower().replace("-", "_"))
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ValueError(f"Invalid monitor variant '{value}'. Must be one of: {choices}")


class Monitor:
    """
    Constant-memory streaming uncertainty monitor for one stream.

    Each ``step`` computes s_t against the window, U_t and r_t, decides with
    the threshold from earlier steps, folds r_t into the tracker and finally
    pushes the step into the window.

    Example:
        >>> monitor = Monitor(Config(), CombinerParams.default(), num_classes=10)
        >>> for result in monitor.run(records):
        ...     print(result.decision.kind)
    """

    def __init__(
        self,
        config: Config,
        params: CombinerParams,
        num_classes: int,
        feature_dim: int = 0,
        quantized: bool = False,
        variant: MonitorVariant = MonitorVariant.FULL,
        lut: LogLUT | None = None,
    ):
        self.config = config
        self.variant = variant
        self.quantized = quantized
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.params = self._effective_params(params, variant)
        self.lambda_ = 0.0 if variant == MonitorVariant.MAXPROB else config.calib.lambda_
        window_cls = QuantizedWindow if quantized else TemporalWindow
        self.window = window_cls(config.signal.window, num_classes, feature_dim)
        self.lut = (lut or LogLUT(config.lut_size)) if quantized else None
        self.state = MonitorState(config.calib, fixed_threshold=variant == MonitorVariant.NO_CONFORMAL)
        self.steps = 0

    @staticmethod
    def _effective_params(params: CombinerParams, variant: MonitorVariant) -> CombinerParams:
        if variant == MonitorVariant.NO_TEMPORAL:
            return CombinerParams(weights=(0.0, 0.0, 0.0, params.weights[3]), bias=params.bias)
        return params

    def _validate(self, record: StreamRecord) -> None:
        if record.num_classes != self.num_classes:
            raise DimensionMismatchError(
                f"posterior has length {record.num_classes}, expected {self.num_classes}", record.t
            )
        if self.feature_dim:
            if record.feature is None:
                raise DimensionMismatchError("record has no feature vector", record.t)
            if record.feature.size != self.feature_dim:
                raise DimensionMismatchError(
                    f"feature has length {record.feature.size}, expected {self.feature_dim}", record.t
                )

    def signals_for(self, record: StreamRecord) -> SignalVector:
        """Signal vector of ``record`` against the current window (no state change)."""
        label = record.predicted_label
        feature = record.feature if self.feature_dim else None
        if self.quantized:
            return compute_signals_quantized(
                self.window, record.posterior, feature, label, self.config.signal, self.lut  # type: ignore[arg-type]
            )
        return compute_signals(self.window, record.posterior, feature, label, self.config.signal)

    def step(self, record: StreamRecord) -> MonitorStep:
        """
        Process one input and emit its decision.

        Raises:
            DimensionMismatchError: If the record does not match the configured dimensions
        """
        self._validate(record)
        label = record.predicted_label
        confidence = record.confidence
        signals = self.signals_for(record)
        uncertainty = uncertainty_score(signals, self.params)
        score = nonconformity(uncertainty, confidence, self.lambda_)

        warm = not self.state.warmed
        decision = self.state.observe(score, label)
        self.window.push(record.posterior, record.feature if self.feature_dim else None, label)
        self.steps += 1
        return MonitorStep(
            t=record.t,
            decision=decision,
            signals=signals,
            uncertainty=uncertainty,
            confidence=confidence,
            warm=warm,
        )

    def run(self, records: Iterable[StreamRecord]) -> Iterator[MonitorStep]:
        for record in records:
            yield self.step(record)

    def state_nbytes(self) -> int:
        """Bytes of per-stream state: window, tracker, controller and the scalar counters."""
        return self.window.nbytes + self.state.nbytes + 8


def rescore(
    records: Sequence[StreamRecord],
    steps: Sequence[MonitorStep],
    config: Config,
    params: CombinerParams,
    variant: MonitorVariant = MonitorVariant.FULL,
) -> list[MonitorStep]:
    """
    Re-run the decision layer over recorded signals with other weights or another variant.

    Signals depend only on the window, so the result equals a fresh ``Monitor``
    with the same config run over the same records.

    Raises:
        AlignmentError: If records and steps are not aligned
    """
    if len(records) != len(steps):
        raise AlignmentError(f"{len(records)} records for {len(steps)} recorded steps")
    effective = Monitor._effective_params(params, variant)
    lambda_ = 0.0 if variant == MonitorVariant.MAXPROB else config.calib.lambda_
    state = MonitorState(config.calib, fixed_threshold=variant == MonitorVariant.NO_CONFORMAL)
    rescored: list[MonitorStep] = []
    for record, step in zip(records, steps):
        uncertainty = uncertainty_score(step.signals, effective)
        score = nonconformity(uncertainty, step.confidence, lambda_)
        warm = not state.warmed
        decision = state.observe(score, record.predicted_label)
        rescored.append(MonitorStep(
            t=step.t,
            decision=decision,
            signals=step.signals,
            uncertainty=uncertainty,
            confidence=step.confidence,
            warm=warm,
        ))
    return rescored


def collect_signals(records: Iterable[StreamRecord], signal_cfg: SignalConfig) -> list[DevExample]:
    """
    Replay a labeled stream through a float window and pair each step's signals
    with whether the backbone was wrong.

    OOD steps count as misclassified; unlabeled steps still advance the window
    but produce no example.
    """
    examples: list[DevExample] = []
    window: TemporalWindow | None = None
    for record in records:
        if window is None:
            feature_dim = record.feature.size if record.feature is not None else 0
            window = TemporalWindow(signal_cfg.window, record.num_classes, feature_dim)
        label = record.predicted_label
        feature = record.feature if window.has_features else None
        try:
            signals = compute_signals(window, record.posterior, feature, label, signal_cfg)
        except DimensionMismatchError as e:
            raise DimensionMismatchError(str(e), record.t)
        if record.is_ood:
            examples.append(DevExample(signals=signals, misclassified=True))
        elif record.is_labeled:
            examples.append(DevExample(signals=signals, misclassified=not record.correct))
        window.push(record.posterior, feature, label)
    return examples
