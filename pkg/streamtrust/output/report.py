"""Flat key/value metrics report and curve point lists."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class MetricEntry:
    name: str
    value: float | int | str | None = None
    skipped: str | None = None

    def render_value(self) -> str:
        if self.skipped is not None:
            return f"skipped: {self.skipped}"
        if isinstance(self.value, bool):
            return "1" if self.value else "0"
        if isinstance(self.value, int):
            return str(self.value)
        if isinstance(self.value, float):
            return "nan" if math.isnan(self.value) else f"{self.value:.9g}"
        return str(self.value)


@dataclass
class MetricsReport:
    """
    Ordered metrics plus optional curve points.

    Metrics that cannot be computed are kept as explicit ``skipped`` lines.
    """

    entries: list[MetricEntry] = field(default_factory=list)
    curves: list[tuple[str, float, float, float]] = field(default_factory=list)

    def add(self, name: str, value: float | int | str) -> None:
        self.entries.append(MetricEntry(name=name, value=value))

    def skip(self, name: str, reason: str) -> None:
        self.entries.append(MetricEntry(name=name, skipped=reason))

    def add_curve(self, curve: str, points: list[tuple[float, float, float]]) -> None:
        """Append (threshold, x, y) points under a curve name."""
        for threshold, x, y in points:
            self.curves.append((curve, threshold, x, y))

    def get(self, name: str) -> MetricEntry | None:
        for entry in self.entries:
            if entry.name == name:
                return entry
        return None

    def render(self) -> str:
        return "".join(f"{e.name}\t{e.render_value()}\n" for e in self.entries)

    def write(self, path: Path | str) -> list[Path]:
        """
        Write the report and, when curves exist, ``<path>.curves.csv``.

        Returns:
            Paths written
        """
        path = Path(path).expanduser()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render())
        written = [path]
        if self.curves:
            curves_path = curves_path_for(path)
            with open(curves_path, "w", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["curve", "threshold", "x", "y"])
                for curve, threshold, x, y in self.curves:
                    writer.writerow([curve, f"{threshold:.9g}", f"{x:.9g}", f"{y:.9g}"])
            written.append(curves_path)
        return written


def curves_path_for(report_path: Path) -> Path:
    return report_path.with_name(report_path.name + ".curves.csv")


def read_report(path: Path | str) -> dict[str, str]:
    """Parse a report back into name -> rendered value."""
    result: dict[str, str] = {}
    for line in Path(path).expanduser().read_text().splitlines():
        if not line.strip():
            continue
        name, _, value = line.partition("\t")
        result[name] = value
    return result
