"""Deterministic synthetic posterior/feature streams with ID, CID and OOD segments."""

from dataclasses import asdict, dataclass
from typing import Any, Iterable, Iterator

import numpy as np

from streamtrust.features import FeatureProjector
from streamtrust.models import OOD_LABEL, SegmentKind, SegmentSpec, StreamRecord


SEVERITIES = (1, 2, 3, 4, 5)


@dataclass
class GeneratorModel:
    """
    Knobs of the synthetic backbone.

    Severity curves are indexed by severity - 1 and must be non-decreasing.
    """

    num_classes: int = 10
    feature_dim: int = 16
    raw_feature_dim: int = 32
    id_accuracy: float = 0.9
    switch_prob: float = 0.05
    logit_noise: float = 0.6
    logit_boost: float = 4.0
    accuracy_drop: tuple[float, ...] = (0.06, 0.12, 0.20, 0.30, 0.42)
    temperature: tuple[float, ...] = (1.1, 1.2, 1.35, 1.5, 1.7)
    feature_noise: tuple[float, ...] = (0.3, 0.5, 0.7, 0.9, 1.2)
    ood_temperature: float = 2.5
    ood_feature_noise: float = 1.5
    ar_coef: float = 0.92
    innovation: float = 0.15
    prototype_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.feature_dim < 0 or self.raw_feature_dim < 1:
            raise ValueError("feature dimensions must be positive (feature_dim 0 disables features)")
        if not 0.0 < self.id_accuracy <= 1.0:
            raise ValueError(f"id_accuracy must be in (0, 1], got {self.id_accuracy}")
        if not 0.0 <= self.switch_prob <= 1.0:
            raise ValueError(f"switch_prob must be in [0, 1], got {self.switch_prob}")
        if not 0.0 <= self.ar_coef < 1.0:
            raise ValueError(f"ar_coef must be in [0, 1), got {self.ar_coef}")
        for name in ("accuracy_drop", "temperature", "feature_noise"):
            curve = tuple(float(v) for v in getattr(self, name))
            if len(curve) != len(SEVERITIES):
                raise ValueError(f"{name} needs {len(SEVERITIES)} entries, got {len(curve)}")
            if any(b < a for a, b in zip(curve, curve[1:])):
                raise ValueError(f"{name} must be non-decreasing in severity")
            setattr(self, name, curve)
        if self.id_accuracy - self.accuracy_drop[-1] < 0.0:
            raise ValueError("accuracy_drop exceeds id_accuracy at the highest severity")
        if min(self.temperature) <= 0 or self.ood_temperature <= 0:
            raise ValueError("temperatures must be positive")

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> "GeneratorModel":
        data = dict(data or {})
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown generator model keys: {', '.join(sorted(unknown))}")
        for key in ("accuracy_drop", "temperature", "feature_noise"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def model_dump(self) -> dict[str, Any]:
        data = asdict(self)
        for key in ("accuracy_drop", "temperature", "feature_noise"):
            data[key] = list(data[key])
        return data


@dataclass
class _SegmentParams:
    accuracy: float
    temperature: float
    feature_noise: float
    ood: bool = False


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


class StreamGenerator:
    """
    Stateful generator; class dwell state and the feature process carry over
    between segments, while each segment draws from its own seeded RNG.
    """

    def __init__(self, model: GeneratorModel):
        self.model = m = model
        self.t = 0
        rng = np.random.default_rng(m.prototype_seed)
        self._prototypes = rng.standard_normal((m.num_classes, m.raw_feature_dim))
        self._projector = (
            FeatureProjector.from_seed(m.raw_feature_dim, m.feature_dim, m.prototype_seed + 1)
            if m.feature_dim else None
        )
        self._state = np.zeros(m.raw_feature_dim)
        self._true_class = int(rng.integers(m.num_classes))

    def _params(self, spec: SegmentSpec) -> _SegmentParams:
        m = self.model
        if spec.kind == SegmentKind.ID:
            return _SegmentParams(m.id_accuracy, 1.0, 0.0)
        if spec.kind == SegmentKind.CID:
            i = spec.severity - 1  # type: ignore[operator]
            return _SegmentParams(m.id_accuracy - m.accuracy_drop[i], m.temperature[i], m.feature_noise[i])
        return _SegmentParams(0.0, m.ood_temperature, m.ood_feature_noise, ood=True)

    def _other_class(self, rng: np.random.Generator, cls: int) -> int:
        return int((cls + rng.integers(1, self.model.num_classes)) % self.model.num_classes)

    def segment(self, spec: SegmentSpec) -> Iterator[StreamRecord]:
        m = self.model
        rng = np.random.default_rng(spec.seed)
        p = self._params(spec)
        for _ in range(spec.length):
            if rng.random() < m.switch_prob:
                self._true_class = self._other_class(rng, self._true_class)

            if p.ood:
                predicted = int(rng.integers(m.num_classes))
                label = OOD_LABEL
            else:
                correct = rng.random() < p.accuracy
                predicted = self._true_class if correct else self._other_class(rng, self._true_class)
                label = self._true_class

            logits = rng.normal(0.0, m.logit_noise, m.num_classes)
            logits[predicted] += m.logit_boost
            top = int(np.argmax(logits))
            if top != predicted:
                logits[top], logits[predicted] = logits[predicted], logits[top]
            posterior = _softmax(logits / p.temperature)

            self._state = m.ar_coef * self._state + m.innovation * rng.standard_normal(m.raw_feature_dim)
            feature = None
            if self._projector is not None:
                if p.ood:
                    raw = rng.standard_normal(m.raw_feature_dim) + self._state
                else:
                    raw = self._prototypes[predicted] + self._state
                if p.feature_noise:
                    raw = raw + p.feature_noise * rng.standard_normal(m.raw_feature_dim)
                feature = self._projector.project(raw)

            yield StreamRecord(t=self.t, posterior=posterior, feature=feature, label=label)
            self.t += 1


def generate(specs: Iterable[SegmentSpec], model: GeneratorModel | None = None) -> Iterator[StreamRecord]:
    """
    Yield records for each segment in order.

    Generation is a pure function of (specs, model).

    Raises:
        ValueError: If the spec list is empty
    """
    specs = list(specs)
    if not specs:
        raise ValueError("stream spec needs at least one segment")
    generator = StreamGenerator(model or GeneratorModel())
    for spec in specs:
        yield from generator.segment(spec)


def dev_mixture(length: int, seed: int, shift_fraction: float = 0.5) -> list[SegmentSpec]:
    """
    Development-set segment plan: an ID block followed by the shifted share
    spread over CID severities 1..5 and one OOD burst.
    """
    if length < 12:
        raise ValueError(f"dev mixture needs at least 12 steps, got {length}")
    if not 0.0 < shift_fraction < 1.0:
        raise ValueError(f"shift_fraction must be in (0, 1), got {shift_fraction}")
    shifted = int(round(length * shift_fraction))
    id_length = length - shifted
    parts = len(SEVERITIES) + 1
    sizes = [shifted // parts] * parts
    sizes[-1] += shifted - sum(sizes)
    specs = [SegmentSpec(SegmentKind.ID, id_length, seed)]
    for i, severity in enumerate(SEVERITIES):
        specs.append(SegmentSpec(SegmentKind.CID, sizes[i], seed + i + 1, severity=severity))
    specs.append(SegmentSpec(SegmentKind.OOD, sizes[-1], seed + parts))
    return specs
