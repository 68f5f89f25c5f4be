"""RIPE Atlas measurement acquisition, parsing, validation and aggregation."""

from .client import AtlasClient
from .jsonl import (
    JsonlStats,
    load_jsonl,
    load_probe_catalog,
    read_summaries,
    write_summaries,
)
from .records import (
    MeasurementRecord,
    ProbeMeta,
    ProbeSummary,
    RawPingResult,
    RawTracerouteResult,
    ValidationReport,
    aggregate_probe_stats,
    derive_record,
    parse_ping_result,
    parse_traceroute_result,
    validate_record,
)

__all__ = [
    "AtlasClient",
    "JsonlStats",
    "MeasurementRecord",
    "ProbeMeta",
    "ProbeSummary",
    "RawPingResult",
    "RawTracerouteResult",
    "ValidationReport",
    "aggregate_probe_stats",
    "derive_record",
    "load_jsonl",
    "load_probe_catalog",
    "parse_ping_result",
    "parse_traceroute_result",
    "read_summaries",
    "validate_record",
    "write_summaries",
]
