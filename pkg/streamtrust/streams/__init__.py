"""Stream sources: the synthetic generator and the record file codec."""

from streamtrust.streams.generator import GeneratorModel, StreamGenerator, dev_mixture, generate
from streamtrust.streams.plan import StreamPlan, load_plan, parse_plan
from streamtrust.streams.records import (
    StreamHeader,
    read_decisions,
    read_header,
    read_stream,
    write_decisions,
    write_stream,
)

__all__ = [
    "GeneratorModel",
    "StreamGenerator",
    "StreamHeader",
    "StreamPlan",
    "dev_mixture",
    "generate",
    "load_plan",
    "parse_plan",
    "read_decisions",
    "read_header",
    "read_stream",
    "write_decisions",
    "write_stream",
]
