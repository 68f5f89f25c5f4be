"""JSONL readers/writers for raw results, probe catalogs and summaries."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import EmptyInput, FileUnreadable
from .records import ProbeMeta, ProbeSummary


@dataclass
class JsonlStats:
    parsed: int = 0
    skipped: int = 0


def load_jsonl(path, stats: JsonlStats | None = None):
    """Yield one document per parseable line; count and skip malformed lines.

    Raises EmptyInput when the file holds zero parseable lines.
    """
    own_stats = stats if stats is not None else JsonlStats()
    try:
        fp = open(path)
    except OSError as exc:
        raise FileUnreadable(f"{path}: {exc}") from exc
    with fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError:
                own_stats.skipped += 1
                continue
            own_stats.parsed += 1
            yield doc
    if own_stats.parsed == 0:
        raise EmptyInput(f"{path}: no parseable JSON lines")


def load_probe_catalog(path) -> dict[int, ProbeMeta]:
    """probe_id -> ProbeMeta; probe_id must be unique within the catalog."""
    catalog: dict[int, ProbeMeta] = {}
    for doc in load_jsonl(path):
        meta = ProbeMeta(
            probe_id=int(doc["probe_id"]),
            asn=int(doc["asn"]),
            latitude=float(doc["latitude"]),
            longitude=float(doc["longitude"]),
        )
        meta.validate()
        if meta.probe_id in catalog:
            raise ValueError(f"duplicate probe_id {meta.probe_id} in {path}")
        catalog[meta.probe_id] = meta
    return catalog


SUMMARY_FIELDS = (
    "probe_id",
    "asn",
    "latitude",
    "longitude",
    "avg_rtt",
    "jitter",
    "packet_loss",
    "measurement_count",
)


def write_summaries(summaries: list[ProbeSummary], path) -> None:
    """One probe per line, fixed field order, sorted by probe_id."""
    with open(path, "w") as fp:
        for s in sorted(summaries, key=lambda s: s.probe_id):
            doc = {name: getattr(s, name) for name in SUMMARY_FIELDS}
            json.dump(doc, fp, separators=(",", ":"))
            fp.write("\n")


def read_summaries(path) -> list[ProbeSummary]:
    summaries = []
    for doc in load_jsonl(path):
        summaries.append(
            ProbeSummary(
                probe_id=int(doc["probe_id"]),
                asn=int(doc["asn"]),
                latitude=float(doc["latitude"]),
                longitude=float(doc["longitude"]),
                avg_rtt=float(doc["avg_rtt"]),
                jitter=float(doc["jitter"]),
                packet_loss=float(doc["packet_loss"]),
                measurement_count=int(doc["measurement_count"]),
            )
        )
    return summaries
