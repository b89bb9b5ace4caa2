"""Stream plan files: the generator model and the segment list for ``gen``."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from streamtrust.config import load_yaml
from streamtrust.models import SegmentKind, SegmentSpec
from streamtrust.streams.generator import GeneratorModel, dev_mixture


DEV_KIND = "dev"


@dataclass
class StreamPlan:
    seed: int
    model: GeneratorModel
    segments: list[SegmentSpec]

    @property
    def length(self) -> int:
        return sum(s.length for s in self.segments)

    def model_dump(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "model": self.model.model_dump(),
            "segments": [s.model_dump() for s in self.segments],
        }


def _segment(entry: Any, index: int, base_seed: int) -> list[SegmentSpec]:
    if not isinstance(entry, dict):
        raise ValueError(f"segment {index}: expected a mapping, got {type(entry).__name__}")
    unknown = set(entry) - {"kind", "length", "severity", "seed", "shift_fraction"}
    if unknown:
        raise ValueError(f"segment {index}: unknown keys {', '.join(sorted(unknown))}")
    if "kind" not in entry or "length" not in entry:
        raise ValueError(f"segment {index}: 'kind' and 'length' are required")
    seed = int(entry.get("seed", base_seed + index + 1))
    length = int(entry["length"])
    if str(entry["kind"]).lower() == DEV_KIND:
        return dev_mixture(length, seed, float(entry.get("shift_fraction", 0.5)))
    kind = SegmentKind.parse(entry["kind"])
    severity = entry.get("severity")
    try:
        return [SegmentSpec(kind, length, seed, severity=None if severity is None else int(severity))]
    except ValueError as e:
        raise ValueError(f"segment {index}: {e}")


def parse_plan(data: Any, seed: int | None = None) -> StreamPlan:
    """
    Build a plan from its mapping form.

    Segment seeds default to base seed + position + 1; an explicit ``seed``
    argument replaces the base seed from the file.

    Raises:
        ValueError: On unknown keys, a missing segment list or invalid segments
    """
    if not isinstance(data, dict):
        raise ValueError("stream plan must be a mapping")
    unknown = set(data) - {"seed", "model", "segments"}
    if unknown:
        raise ValueError(f"Unknown stream plan keys: {', '.join(sorted(unknown))}")
    segments = data.get("segments")
    if not isinstance(segments, list) or not segments:
        raise ValueError("stream plan needs a non-empty 'segments' list")
    base_seed = int(seed if seed is not None else data.get("seed", 0))
    specs: list[SegmentSpec] = []
    for index, entry in enumerate(segments):
        specs.extend(_segment(entry, index, base_seed))
    return StreamPlan(seed=base_seed, model=GeneratorModel.from_dict(data.get("model")), segments=specs)


def load_plan(path: Path | str, seed: int | None = None) -> StreamPlan:
    """
    Read a plan from ``.json`` or YAML.

    Raises:
        FileNotFoundError: If the file does not exist
        RuntimeError: If a YAML plan is given without PyYAML installed
        ValueError: If the plan is invalid
    """
    path = Path(path).expanduser()
    if path.suffix.lower() == ".json":
        if not path.exists():
            raise FileNotFoundError(f"File not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"Stream plan {path} is not valid JSON: {e}")
    else:
        data = load_yaml(path)
    return parse_plan(data, seed)
