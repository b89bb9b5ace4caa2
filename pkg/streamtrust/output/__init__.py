"""Report, manifest and console rendering."""

from .manifest import build_manifest, file_digest, manifest_path_for, write_manifest
from .render import render_fit_summary, render_report, render_sweep
from .report import MetricsReport, curves_path_for, read_report

__all__ = [
    "MetricsReport",
    "build_manifest",
    "curves_path_for",
    "file_digest",
    "manifest_path_for",
    "read_report",
    "render_fit_summary",
    "render_report",
    "render_sweep",
    "write_manifest",
]
