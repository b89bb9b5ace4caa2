"""Reading and writing fitted combiner parameters."""

import json
import math
from pathlib import Path
from typing import Any

from streamtrust.models import CombinerParams


PARAMS_FORMAT = "stream-trust params v1"


def save_params(path: Path | str, params: CombinerParams, diagnostics: dict[str, Any] | None = None) -> Path:
    """
    Write parameters as a small JSON document.

    Keys are sorted and floats use their shortest round-trip text, so
    identical parameters always produce identical bytes.

    Args:
        path: Destination file
        params: Fitted combiner parameters
        diagnostics: Optional fit diagnostics stored alongside

    Returns:
        The resolved output path
    """
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    data: dict[str, Any] = {"format": PARAMS_FORMAT, **params.model_dump()}
    if diagnostics:
        data["diagnostics"] = diagnostics
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_params(path: Path | str) -> CombinerParams:
    """
    Load parameters written by ``save_params``.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If keys are missing or values are not finite numbers
    """
    path = Path(path).expanduser()
    if not path.exists():
        raise FileNotFoundError(f"Params file not found: {path}")
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"Params file {path} is not valid JSON: {e}")

    if not isinstance(data, dict) or "weights" not in data or "bias" not in data:
        raise ValueError(f"Params file {path} must contain 'weights' and 'bias'")
    weights = data["weights"]
    if not isinstance(weights, list) or len(weights) != 4:
        raise ValueError(f"Params file {path}: 'weights' must be a list of 4 numbers")
    values = [*weights, data["bias"]]
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values):
        raise ValueError(f"Params file {path}: parameters must be finite numbers")
    return CombinerParams(weights=tuple(weights), bias=data["bias"])
