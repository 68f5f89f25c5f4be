"""Parsing and validation of RIPE Atlas ping/traceroute result documents.

RIPE Atlas marks failed probes with negative sentinel values (-1); any
negative RTT is treated as missing rather than rejecting the document, so
loss statistics survive. Jitter is the population standard deviation of the
per-packet RTTs, falling back to max - min when fewer than two samples
exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import EmptyGroup, MetaMismatch, MissingField, SchemaMismatch, UnusableRecord

# Rejection reasons used by validate_record.
REJECT_NON_POSITIVE_RTT = "non_positive_rtt"
REJECT_IMPLAUSIBLE_RTT = "implausible_rtt"
REJECT_LOSS_OUT_OF_RANGE = "loss_out_of_range"
REJECT_RTT_ORDERING = "rtt_ordering"

# Anything above this is treated as a corrupt document, not a real path.
MAX_PLAUSIBLE_RTT_MS = 10_000.0


@dataclass
class RawPingResult:
    probe_id: int
    msm_id: int
    timestamp: int
    sent: int
    rcvd: int
    min_rtt: float | None
    avg_rtt: float | None
    max_rtt: float | None
    per_packet_rtts: list[float] = field(default_factory=list)


@dataclass
class RawTracerouteResult:
    probe_id: int
    msm_id: int
    timestamp: int
    hops: list[tuple[int, str | None, float | None]]

    @property
    def path_length(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class ProbeMeta:
    probe_id: int
    asn: int
    latitude: float
    longitude: float

    def validate(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"probe {self.probe_id}: latitude {self.latitude} out of bounds")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"probe {self.probe_id}: longitude {self.longitude} out of bounds")


@dataclass
class MeasurementRecord:
    probe_id: int
    avg_rtt: float
    min_rtt: float
    max_rtt: float
    jitter: float
    packet_loss: float
    timestamp: int


@dataclass
class ValidationReport:
    total_seen: int = 0
    accepted: int = 0
    rejected: int = 0
    rejection_reasons: dict[str, int] = field(default_factory=dict)

    def count_accept(self) -> None:
        self.total_seen += 1
        self.accepted += 1

    def count_reject(self, reason: str) -> None:
        self.total_seen += 1
        self.rejected += 1
        self.rejection_reasons[reason] = self.rejection_reasons.get(reason, 0) + 1

    def as_dict(self) -> dict:
        return {
            "total_seen": self.total_seen,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejection_reasons": {k: self.rejection_reasons[k] for k in sorted(self.rejection_reasons)},
        }


@dataclass
class ProbeSummary:
    """Per-probe aggregate over its accepted measurement records."""

    probe_id: int
    asn: int
    latitude: float
    longitude: float
    avg_rtt: float
    jitter: float
    packet_loss: float
    measurement_count: int
    bandwidth_utilization: float | None = None


def _require(doc: dict, name: str):
    if name not in doc or doc[name] is None:
        raise MissingField(f"document missing field '{name}'")
    return doc[name]


def _clean_rtt(value) -> float | None:
    """Negative (sentinel) or non-numeric RTTs become missing."""
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return None
    return float(value) if value > 0 else None


def parse_ping_result(doc: dict) -> RawPingResult:
    if doc.get("type") != "ping":
        raise SchemaMismatch(f"expected a ping document, got type={doc.get('type')!r}")
    sent = int(_require(doc, "sent"))
    rcvd = int(_require(doc, "rcvd"))
    if rcvd < 0 or sent < rcvd:
        raise SchemaMismatch(f"impossible packet counts sent={sent} rcvd={rcvd}")
    per_packet = []
    for entry in doc.get("result", []):
        if isinstance(entry, dict):
            rtt = _clean_rtt(entry.get("rtt"))
            if rtt is not None:
                per_packet.append(rtt)
    return RawPingResult(
        probe_id=int(_require(doc, "prb_id")),
        msm_id=int(_require(doc, "msm_id")),
        timestamp=int(_require(doc, "timestamp")),
        sent=sent,
        rcvd=rcvd,
        min_rtt=_clean_rtt(doc.get("min")),
        avg_rtt=_clean_rtt(doc.get("avg")),
        max_rtt=_clean_rtt(doc.get("max")),
        per_packet_rtts=per_packet,
    )


def parse_traceroute_result(doc: dict) -> RawTracerouteResult:
    if doc.get("type") != "traceroute":
        raise SchemaMismatch(f"expected a traceroute document, got type={doc.get('type')!r}")
    hops = []
    previous = 0
    for hop_doc in _require(doc, "result"):
        hop_index = hop_doc.get("hop")
        if not isinstance(hop_index, int):
            raise MissingField("traceroute hop without a hop number")
        if hop_index <= previous:
            raise SchemaMismatch(f"hop indices not strictly increasing at hop {hop_index}")
        previous = hop_index
        address = None
        rtt = None
        for reply in hop_doc.get("result", []):
            if isinstance(reply, dict) and "from" in reply:
                candidate = _clean_rtt(reply.get("rtt"))
                if candidate is not None:
                    address = reply["from"]
                    rtt = candidate
                    break
                if address is None:
                    address = reply["from"]
        hops.append((hop_index, address, rtt))
    if not hops:
        raise MissingField("traceroute document with no hops")
    return RawTracerouteResult(
        probe_id=int(_require(doc, "prb_id")),
        msm_id=int(_require(doc, "msm_id")),
        timestamp=int(_require(doc, "timestamp")),
        hops=hops,
    )


def derive_record(ping: RawPingResult) -> MeasurementRecord:
    """Turn a parsed ping into a MeasurementRecord; loss from sent/rcvd."""
    if ping.rcvd == 0 or ping.avg_rtt is None:
        raise UnusableRecord(
            f"probe {ping.probe_id}: rcvd={ping.rcvd}, avg={ping.avg_rtt}"
        )
    packet_loss = 100.0 * (ping.sent - ping.rcvd) / ping.sent
    samples = ping.per_packet_rtts
    min_rtt = ping.min_rtt if ping.min_rtt is not None else (min(samples) if samples else ping.avg_rtt)
    max_rtt = ping.max_rtt if ping.max_rtt is not None else (max(samples) if samples else ping.avg_rtt)
    if len(samples) >= 2:
        mean = sum(samples) / len(samples)
        jitter = math.sqrt(sum((s - mean) ** 2 for s in samples) / len(samples))
    else:
        jitter = max(0.0, max_rtt - min_rtt)
    return MeasurementRecord(
        probe_id=ping.probe_id,
        avg_rtt=ping.avg_rtt,
        min_rtt=min_rtt,
        max_rtt=max_rtt,
        jitter=jitter,
        packet_loss=packet_loss,
        timestamp=ping.timestamp,
    )


def validate_record(rec: MeasurementRecord) -> str | None:
    """Return None to accept, or a rejection reason."""
    if rec.avg_rtt <= 0:
        return REJECT_NON_POSITIVE_RTT
    if rec.avg_rtt > MAX_PLAUSIBLE_RTT_MS:
        return REJECT_IMPLAUSIBLE_RTT
    if not 0.0 <= rec.packet_loss <= 100.0:
        return REJECT_LOSS_OUT_OF_RANGE
    if rec.min_rtt > rec.avg_rtt or rec.avg_rtt > rec.max_rtt:
        return REJECT_RTT_ORDERING
    return None


def aggregate_probe_stats(records: list[MeasurementRecord], meta: ProbeMeta) -> ProbeSummary:
    if not records:
        raise EmptyGroup(f"no records for probe {meta.probe_id}")
    for rec in records:
        if rec.probe_id != meta.probe_id:
            raise MetaMismatch(
                f"record probe {rec.probe_id} does not match meta probe {meta.probe_id}"
            )
    n = len(records)
    return ProbeSummary(
        probe_id=meta.probe_id,
        asn=meta.asn,
        latitude=meta.latitude,
        longitude=meta.longitude,
        avg_rtt=sum(r.avg_rtt for r in records) / n,
        jitter=sum(r.jitter for r in records) / n,
        packet_loss=sum(r.packet_loss for r in records) / n,
        measurement_count=n,
    )
