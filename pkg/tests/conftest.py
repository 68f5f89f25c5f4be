"""Shared fixtures: canned measurement documents and small graphs."""

from __future__ import annotations

import numpy as np
import pytest

from ndtwin.ingest.records import ProbeSummary
from ndtwin.nn.sparse import CsrAdjacency


def make_ping_doc(
    prb_id=101,
    msm_id=9000,
    timestamp=1_700_000_000,
    sent=3,
    rcvd=3,
    min_rtt=10.0,
    avg=12.0,
    max_rtt=20.0,
    rtts=(10.0, 12.0, 14.0),
):
    return {
        "type": "ping",
        "prb_id": prb_id,
        "msm_id": msm_id,
        "timestamp": timestamp,
        "sent": sent,
        "rcvd": rcvd,
        "min": min_rtt,
        "avg": avg,
        "max": max_rtt,
        "result": [{"rtt": r} for r in rtts],
    }


def make_traceroute_doc(prb_id=101, msm_id=9001, timestamp=1_700_000_000, hops=5, timeout_at=None):
    result = []
    for hop in range(1, hops + 1):
        if timeout_at is not None and hop == timeout_at:
            result.append({"hop": hop, "result": [{"x": "*"}]})
        else:
            result.append({"hop": hop, "result": [{"from": f"10.0.0.{hop}", "rtt": 1.5 * hop}]})
    return {
        "type": "traceroute",
        "prb_id": prb_id,
        "msm_id": msm_id,
        "timestamp": timestamp,
        "result": result,
    }


def make_summary(probe_id=1, asn=64512, lat=52.5, lon=13.4, rtt=20.0, jitter=2.0,
                 loss=1.0, count=10):
    return ProbeSummary(
        probe_id=probe_id,
        asn=asn,
        latitude=lat,
        longitude=lon,
        avg_rtt=rtt,
        jitter=jitter,
        packet_loss=loss,
        measurement_count=count,
    )


def random_symmetric_adjacency(n: int, rng: np.random.Generator, p: float = 0.4) -> CsrAdjacency:
    """Random undirected graph as a symmetric directed arc set."""
    arcs = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                arcs.append((i, j))
                arcs.append((j, i))
    if not arcs:  # keep at least one edge so graphs are never degenerate
        arcs = [(0, 1), (1, 0)]
    return CsrAdjacency(n, np.array(arcs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
