"""Data models for the stream-trust monitor."""

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any
import json
import math

import numpy as np


OOD_LABEL = -1
SIMPLEX_TOLERANCE = 1e-5
RANGE_TOLERANCE = 1e-9
LN2 = math.log(2.0)


class DecisionKind(str, Enum):
    """Outcome of the accept/abstain policy."""

    ACCEPT = "ACCEPT"
    ABSTAIN = "ABSTAIN"


class SegmentKind(str, Enum):
    """Kind of synthetic stream segment."""

    ID = "ID"
    CID = "CID"
    OOD = "OOD"

    @classmethod
    def parse(cls, value: str) -> "SegmentKind":
        """Parse a segment kind case-insensitively."""
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"Invalid segment kind '{value}'. Must be one of: ID, CID, OOD")


@dataclass
class StreamRecord:
    """One timestep: posterior, optional feature, optional ground-truth label.

    A label of -1 marks an out-of-distribution step; None means unlabeled.
    """

    t: int
    posterior: np.ndarray
    feature: np.ndarray | None = None
    label: int | None = None

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"step index must be non-negative, got {self.t}")
        self.posterior = np.asarray(self.posterior, dtype=np.float64)
        if self.posterior.ndim != 1:
            raise ValueError("posterior must be a vector")
        if not np.all(np.isfinite(self.posterior)):
            raise ValueError("posterior contains non-finite entries")
        if np.any(self.posterior < 0.0):
            raise ValueError("posterior contains negative entries")
        total = float(self.posterior.sum())
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError(f"posterior sums to {total:.9g}, expected 1")
        if self.feature is not None:
            self.feature = np.asarray(self.feature, dtype=np.float64)
            if self.feature.ndim != 1 or not np.all(np.isfinite(self.feature)):
                raise ValueError("feature must be a finite vector")
        if self.label is not None:
            if self.label < OOD_LABEL or self.label >= len(self.posterior):
                raise ValueError(f"label {self.label} outside [-1, {len(self.posterior)})")

    @property
    def num_classes(self) -> int:
        return len(self.posterior)

    @property
    def is_ood(self) -> bool:
        return self.label == OOD_LABEL

    @property
    def is_labeled(self) -> bool:
        """True when the step carries an in-range ground-truth class."""
        return self.label is not None and self.label != OOD_LABEL

    @property
    def predicted_label(self) -> int:
        return int(np.argmax(self.posterior))

    @property
    def confidence(self) -> float:
        return float(self.posterior.max())

    @property
    def correct(self) -> bool | None:
        """Whether the argmax matches the label; None when not applicable."""
        if not self.is_labeled:
            return None
        return self.predicted_label == self.label


@dataclass(frozen=True)
class SignalVector:
    """The four temporal-consistency signals fed to the combiner."""

    divergence: float
    instability: float
    inconsistency: float
    proxy: float

    def __post_init__(self) -> None:
        bounds = {
            "divergence": (0.0, LN2),
            "instability": (0.0, 2.0),
            "inconsistency": (0.0, 1.0),
            "proxy": (0.0, 1.0),
        }
        for name, (low, high) in bounds.items():
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"signal {name} is not finite")
            if value < low - RANGE_TOLERANCE or value > high + RANGE_TOLERANCE:
                raise ValueError(f"signal {name}={value} outside [{low}, {high}]")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.divergence, self.instability, self.inconsistency, self.proxy],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, values: np.ndarray | list[float]) -> "SignalVector":
        d, s, c, m = (float(v) for v in values)
        return cls(divergence=d, instability=s, inconsistency=c, proxy=m)

    def model_dump(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class CombinerParams:
    """Logistic combiner weights and bias."""

    weights: tuple[float, float, float, float]
    bias: float

    def __post_init__(self) -> None:
        if len(self.weights) != 4:
            raise ValueError(f"combiner needs 4 weights, got {len(self.weights)}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "bias", float(self.bias))
        if not all(math.isfinite(v) for v in (*self.weights, self.bias)):
            raise ValueError("combiner parameters must be finite")

    @classmethod
    def default(cls) -> "CombinerParams":
        """Hand-set parameters used when no fitted params file is given."""
        return cls(weights=(3.0, 2.0, 2.0, 3.0), bias=-3.0)

    @classmethod
    def zero(cls) -> "CombinerParams":
        return cls(weights=(0.0, 0.0, 0.0, 0.0), bias=0.0)

    def model_dump(self) -> dict[str, Any]:
        return {"weights": list(self.weights), "bias": self.bias}


@dataclass(frozen=True)
class Decision:
    """Accept(label, score) or Abstain(score), with the threshold in force."""

    kind: DecisionKind
    score: float
    quantile: float
    label: int | None = None

    def __post_init__(self) -> None:
        if self.kind == DecisionKind.ACCEPT and (self.label is None or self.label < 0):
            raise ValueError("Accept decisions must carry a valid label")

    @classmethod
    def accept(cls, label: int, score: float, quantile: float) -> "Decision":
        return cls(kind=DecisionKind.ACCEPT, score=score, quantile=quantile, label=label)

    @classmethod
    def abstain(cls, score: float, quantile: float) -> "Decision":
        return cls(kind=DecisionKind.ABSTAIN, score=score, quantile=quantile)

    @property
    def abstained(self) -> bool:
        return self.kind == DecisionKind.ABSTAIN


@dataclass(frozen=True)
class DevExample:
    """One development-set row: signals and whether the backbone was wrong."""

    signals: SignalVector
    misclassified: bool


@dataclass(frozen=True)
class SegmentSpec:
    """One segment of a synthetic stream."""

    kind: SegmentKind
    length: int
    seed: int
    severity: int | None = None

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError(f"segment length must be >= 1, got {self.length}")
        if self.kind == SegmentKind.CID:
            if self.severity is None or not 1 <= self.severity <= 5:
                raise ValueError(f"CID severity must be in 1..5, got {self.severity}")
        elif self.severity is not None:
            raise ValueError(f"severity is only valid for CID segments, got {self.kind.value}")

    def model_dump(self) -> dict[str, Any]:
        data: dict[str, Any] = {"kind": self.kind.value, "length": self.length, "seed": self.seed}
        if self.severity is not None:
            data["severity"] = self.severity
        return data


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run, written beside its outputs."""

    command: str
    tool_version: str
    config: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def model_dump(self) -> dict[str, Any]:
        return asdict(self)

    def model_dump_json(self, **kwargs: Any) -> str:
        """Serialize to JSON with sorted keys for stability."""
        return json.dumps(self.model_dump(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class MonitorStep:
    """Everything the monitor computed for one input; one line of a decisions file."""

    t: int
    decision: Decision
    signals: SignalVector
    uncertainty: float
    confidence: float
    warm: bool

    @property
    def score(self) -> float:
        return self.decision.score

    @property
    def quantile(self) -> float:
        return self.decision.quantile
