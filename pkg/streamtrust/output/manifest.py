"""Run manifests written beside every command's outputs."""

import hashlib
from pathlib import Path
from typing import Any

from streamtrust import __version__
from streamtrust.models import RunManifest


def manifest_path_for(output: Path | str) -> Path:
    output = Path(output).expanduser()
    return output.with_name(output.name + ".manifest.json")


def file_digest(path: Path | str) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(Path(path).expanduser(), "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    command: str,
    config: dict[str, Any] | None = None,
    inputs: dict[str, Path | str | None] | None = None,
    outputs: dict[str, Path | str] | None = None,
    seeds: dict[str, int] | None = None,
    extra: dict[str, Any] | None = None,
) -> RunManifest:
    return RunManifest(
        command=command,
        tool_version=__version__,
        config=dict(config or {}),
        inputs={k: str(v) for k, v in (inputs or {}).items() if v is not None},
        outputs={k: str(v) for k, v in (outputs or {}).items()},
        seeds=dict(seeds or {}),
        extra=dict(extra or {}),
    )


def write_manifest(output: Path | str, manifest: RunManifest) -> Path:
    """Write ``<output>.manifest.json`` and return its path."""
    path = manifest_path_for(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json() + "\n")
    return path
