"""Line-delimited text codec for stream and decision files."""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from streamtrust.errors import RecordFormatError
from streamtrust.models import Decision, DecisionKind, MonitorStep, SignalVector, StreamRecord


STREAM_MAGIC = "#stream-trust stream v1"
DECISIONS_MAGIC = "#stream-trust decisions v1"
DECISION_COLUMNS = (
    "t", "kind", "label", "score", "quantile", "uncertainty",
    "divergence", "instability", "inconsistency", "proxy", "confidence", "warm",
)

_HEADER_RE = re.compile(r"^#stream-trust stream v1 L=(\d+) d=(\d+)$")


def fmt(value: float) -> str:
    return f"{value:.9g}"


def _fmt_vector(values: np.ndarray) -> str:
    return ",".join(fmt(float(v)) for v in values)


@dataclass(frozen=True)
class StreamHeader:
    num_classes: int
    feature_dim: int

    def render(self) -> str:
        return f"{STREAM_MAGIC} L={self.num_classes} d={self.feature_dim}"


def format_record(record: StreamRecord) -> str:
    label = "" if record.label is None else str(record.label)
    feature = "" if record.feature is None else _fmt_vector(record.feature)
    return "\t".join([str(record.t), label, _fmt_vector(record.posterior), feature])


def write_stream(
    path: Path | str,
    records: Iterable[StreamRecord],
    num_classes: int,
    feature_dim: int = 0,
) -> int:
    """
    Write records under a header declaring L and d'.

    Returns:
        Number of records written
    """
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="\n") as f:
        f.write(StreamHeader(num_classes, feature_dim).render() + "\n")
        for record in records:
            f.write(format_record(record) + "\n")
            count += 1
    return count


def _parse_vector(text: str, expected: int, what: str, index: int) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != expected:
        raise RecordFormatError(f"{what} has {len(parts)} entries, expected {expected}", index)
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise RecordFormatError(f"{what} contains a non-numeric entry", index)


def parse_record(line: str, header: StreamHeader, index: int) -> StreamRecord:
    """
    Parse one record line.

    Raises:
        RecordFormatError: If the line is malformed or fails validation
    """
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 4:
        raise RecordFormatError(f"expected 4 tab-separated fields, got {len(fields)}", index)
    t_text, label_text, posterior_text, feature_text = fields
    try:
        t = int(t_text)
        label = int(label_text) if label_text != "" else None
    except ValueError:
        raise RecordFormatError("step index and label must be integers", index)
    posterior = _parse_vector(posterior_text, header.num_classes, "posterior", index)
    feature = None
    if header.feature_dim:
        feature = _parse_vector(feature_text, header.feature_dim, "feature", index)
    elif feature_text != "":
        raise RecordFormatError("feature present but header declares d=0", index)
    try:
        return StreamRecord(t=t, posterior=posterior, feature=feature, label=label)
    except ValueError as e:
        raise RecordFormatError(str(e), index)


def _read_header(f: TextIO, path: Path) -> StreamHeader:
    first = f.readline().rstrip("\n")
    match = _HEADER_RE.match(first)
    if not match:
        raise RecordFormatError(f"{path} does not start with a '{STREAM_MAGIC} L=<L> d=<d>' header", 0)
    header = StreamHeader(num_classes=int(match.group(1)), feature_dim=int(match.group(2)))
    if header.num_classes < 2:
        raise RecordFormatError(f"header declares L={header.num_classes}, need at least 2", 0)
    return header


def read_header(path: Path | str) -> StreamHeader:
    path = Path(path).expanduser()
    with open(path, "r") as f:
        return _read_header(f, path)


def read_stream(path: Path | str) -> Iterator[StreamRecord]:
    """
    Yield records in file order, validating each one.

    Raises:
        FileNotFoundError: If the file does not exist
        RecordFormatError: On the first malformed record, after all earlier records were yielded
    """
    path = Path(path).expanduser()
    if not path.exists():
        raise FileNotFoundError(f"Stream file not found: {path}")
    with open(path, "r") as f:
        header = _read_header(f, path)
        index = 0
        for line in f:
            if not line.strip():
                continue
            yield parse_record(line, header, index)
            index += 1


def format_decision(row: MonitorStep) -> str:
    d = row.decision
    s = row.signals
    return "\t".join([
        str(row.t),
        d.kind.value,
        "" if d.label is None else str(d.label),
        fmt(d.score),
        fmt(d.quantile),
        fmt(row.uncertainty),
        fmt(s.divergence),
        fmt(s.instability),
        fmt(s.inconsistency),
        fmt(s.proxy),
        fmt(row.confidence),
        "1" if row.warm else "0",
    ])


def write_decisions(path: Path | str, rows: Iterable[MonitorStep]) -> int:
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="\n") as f:
        f.write(DECISIONS_MAGIC + "\t" + "\t".join(DECISION_COLUMNS) + "\n")
        for row in rows:
            f.write(format_decision(row) + "\n")
            count += 1
    return count


def parse_decision(line: str, index: int) -> MonitorStep:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != len(DECISION_COLUMNS):
        raise RecordFormatError(f"expected {len(DECISION_COLUMNS)} fields, got {len(fields)}", index)
    try:
        t = int(fields[0])
        kind = DecisionKind(fields[1])
        label = int(fields[2]) if fields[2] != "" else None
        numbers = [float(v) for v in fields[3:11]]
        warm = fields[11] == "1"
        decision = Decision(kind=kind, score=numbers[0], quantile=numbers[1], label=label)
        signals = SignalVector.from_array(numbers[3:7])
    except ValueError as e:
        raise RecordFormatError(str(e), index)
    return MonitorStep(t=t, decision=decision, uncertainty=numbers[2], signals=signals,
                       confidence=numbers[7], warm=warm)


def read_decisions(path: Path | str) -> list[MonitorStep]:
    """
    Read a decisions file written by ``write_decisions``.

    Raises:
        FileNotFoundError: If the file does not exist
        RecordFormatError: If the header or any line is malformed
    """
    path = Path(path).expanduser()
    if not path.exists():
        raise FileNotFoundError(f"Decisions file not found: {path}")
    rows: list[MonitorStep] = []
    with open(path, "r") as f:
        header = f.readline()
        if not header.startswith(DECISIONS_MAGIC):
            raise RecordFormatError(f"{path} does not start with a '{DECISIONS_MAGIC}' header", 0)
        for line in f:
            if not line.strip():
                continue
            rows.append(parse_decision(line, len(rows)))
    return rows
