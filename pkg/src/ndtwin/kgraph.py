"""Three-layer knowledge base built from aggregated probe summaries.

Layers: topology (nodes + arcs), network state (per-node RTT/jitter/loss),
and application state (sensitivity profiles). Arcs are stored directed,
one pair per undirected adjacency, no self-loops. An arc (u, v) exists iff
the probes are within `geo_radius_km` great-circle distance OR the cosine
similarity of their standardized measurement vectors (avg_rtt, jitter,
loss) reaches `sim_threshold`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CorruptSnapshot, MissingCoordinates, TooFewNodes, VersionMismatch
from .qoe import AppProfile, builtin_profiles

EARTH_RADIUS_KM = 6371.0
SCHEMA_VERSION = 1

REASON_GEO = "geo"
REASON_SIMILARITY = "similarity"
REASON_BOTH = "both"


@dataclass
class ProbeNode:
    node_index: int
    probe_id: int
    asn: int
    latitude: float
    longitude: float
    measurement_count: int
    degree: int = 0
    neighbor_count: int = 0
    centrality: float = 0.0
    connectivity_score: float = 0.0


@dataclass(frozen=True)
class TopologyEdge:
    src: int
    dst: int
    reason: str


@dataclass
class StateRecord:
    node_index: int
    avg_rtt: float
    jitter: float
    packet_loss: float
    bandwidth_utilization: float | None = None


@dataclass
class KnowledgeBase:
    nodes: list[ProbeNode]
    arcs: list[TopologyEdge]
    state: list[StateRecord]
    app_profiles: list[AppProfile]
    schema_version: int = SCHEMA_VERSION

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def arc_array(self) -> np.ndarray:
        """Arcs as an (E, 2) int array of (src, dst), in stored order."""
        if not self.arcs:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(a.src, a.dst) for a in self.arcs], dtype=np.int64)


def haversine_km(lat_a: float, lon_a: float, lat_b: float, lon_b: float) -> float:
    """Great-circle distance in km on a 6371.0 km sphere."""
    phi_a, phi_b = math.radians(lat_a), math.radians(lat_b)
    dphi = phi_b - phi_a
    dlam = math.radians(lon_b - lon_a)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def pairwise_haversine_km(lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Full N x N great-circle distance matrix (vectorized)."""
    phi = np.radians(np.asarray(lats, dtype=np.float64))
    lam = np.radians(np.asarray(lons, dtype=np.float64))
    dphi = phi[:, None] - phi[None, :]
    dlam = lam[:, None] - lam[None, :]
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi)[:, None] * np.cos(phi)[None, :] * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _standardized_similarity(measurements: np.ndarray) -> np.ndarray:
    """Cosine similarity between per-node standardized measurement vectors.

    Columns are z-scored with the population std; a constant column becomes
    zeros, and a node whose standardized vector has zero norm gets
    similarity 0 to everything (no similarity edges).
    """
    mean = measurements.mean(axis=0)
    std = measurements.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    z = (measurements - mean) / std
    norms = np.linalg.norm(z, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = z / safe[:, None]
    sim = unit @ unit.T
    sim[norms == 0, :] = 0.0
    sim[:, norms == 0] = 0.0
    return sim


def build_topology(summaries, geo_radius_km: float, sim_threshold: float) -> KnowledgeBase:
    """One node per probe summary; arcs by geo-distance OR cosine similarity.

    Deterministic given input order: node_index follows the summaries list
    and arcs are emitted sorted by (src, dst).
    """
    n = len(summaries)
    if n < 2:
        raise TooFewNodes(f"need at least 2 probes, got {n}")
    for s in summaries:
        if s.latitude is None or s.longitude is None:
            raise MissingCoordinates(f"probe {s.probe_id} has no coordinates")

    lats = np.array([s.latitude for s in summaries], dtype=np.float64)
    lons = np.array([s.longitude for s in summaries], dtype=np.float64)
    meas = np.array(
        [(s.avg_rtt, s.jitter, s.packet_loss) for s in summaries], dtype=np.float64
    )

    dist = pairwise_haversine_km(lats, lons)
    sim = _standardized_similarity(meas)

    geo = dist <= geo_radius_km
    similar = sim >= sim_threshold
    np.fill_diagonal(geo, False)
    np.fill_diagonal(similar, False)
    connected = geo | similar

    arcs: list[TopologyEdge] = []
    src_idx, dst_idx = np.nonzero(connected)
    for u, v in zip(src_idx.tolist(), dst_idx.tolist()):
        if geo[u, v] and similar[u, v]:
            reason = REASON_BOTH
        elif geo[u, v]:
            reason = REASON_GEO
        else:
            reason = REASON_SIMILARITY
        arcs.append(TopologyEdge(src=u, dst=v, reason=reason))

    nodes = [
        ProbeNode(
            node_index=i,
            probe_id=s.probe_id,
            asn=s.asn,
            latitude=s.latitude,
            longitude=s.longitude,
            measurement_count=s.measurement_count,
        )
        for i, s in enumerate(summaries)
    ]
    state = [
        StateRecord(
            node_index=i,
            avg_rtt=s.avg_rtt,
            jitter=s.jitter,
            packet_loss=s.packet_loss,
            bandwidth_utilization=getattr(s, "bandwidth_utilization", None),
        )
        for i, s in enumerate(summaries)
    ]
    kb = KnowledgeBase(nodes=nodes, arcs=arcs, state=state, app_profiles=builtin_profiles())
    compute_node_metrics(kb)
    return kb


def compute_node_metrics(kb: KnowledgeBase) -> KnowledgeBase:
    """Fill degree, neighbor_count, centrality and connectivity in place.

    degree = out-arc count, neighbor_count = distinct out-neighbors;
    both normalized by N-1 for the derived scores.
    """
    n = kb.n_nodes
    degree = [0] * n
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for arc in kb.arcs:
        degree[arc.src] += 1
        neighbors[arc.src].add(arc.dst)
    denom = float(n - 1) if n > 1 else 1.0
    for node in kb.nodes:
        node.degree = degree[node.node_index]
        node.neighbor_count = len(neighbors[node.node_index])
        node.centrality = node.degree / denom
        node.connectivity_score = node.neighbor_count / denom
    return kb


def graph_stats(kb: KnowledgeBase) -> dict:
    """Node/arc counts, directed density, and the out-degree histogram."""
    n = kb.n_nodes
    e = kb.n_arcs
    density = e / (n * (n - 1)) if n > 1 else 0.0
    histogram: dict[int, int] = {}
    for node in kb.nodes:
        histogram[node.degree] = histogram.get(node.degree, 0) + 1
    return {
        "nodes": n,
        "arcs": e,
        "density": density,
        "degree_histogram": {str(k): histogram[k] for k in sorted(histogram)},
    }


# --- snapshot persistence -----------------------------------------------------

def snapshot_save(kb: KnowledgeBase, path) -> None:
    """Single JSON document with explicit field order; byte-deterministic."""
    doc = {
        "schema_version": kb.schema_version,
        "nodes": [
            {
                "node_index": nd.node_index,
                "probe_id": nd.probe_id,
                "asn": nd.asn,
                "latitude": nd.latitude,
                "longitude": nd.longitude,
                "measurement_count": nd.measurement_count,
                "degree": nd.degree,
                "neighbor_count": nd.neighbor_count,
                "centrality": nd.centrality,
                "connectivity_score": nd.connectivity_score,
            }
            for nd in kb.nodes
        ],
        "arcs": [[a.src, a.dst, a.reason] for a in kb.arcs],
        "state": [
            {
                "node_index": st.node_index,
                "avg_rtt": st.avg_rtt,
                "jitter": st.jitter,
                "packet_loss": st.packet_loss,
                "bandwidth_utilization": st.bandwidth_utilization,
            }
            for st in kb.state
        ],
        "app_profiles": [asdict(p) for p in kb.app_profiles],
    }
    with open(path, "w") as fp:
        json.dump(doc, fp, separators=(",", ":"))
        fp.write("\n")


def snapshot_load(path) -> KnowledgeBase:
    try:
        with open(path) as fp:
            doc = json.load(fp)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptSnapshot(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CorruptSnapshot(f"{path}: not a knowledge-base snapshot")
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise VersionMismatch(f"snapshot schema {version}, supported {SCHEMA_VERSION}")
    try:
        nodes = [ProbeNode(**nd) for nd in doc["nodes"]]
        arcs = [TopologyEdge(src=a[0], dst=a[1], reason=a[2]) for a in doc["arcs"]]
        state = [StateRecord(**st) for st in doc["state"]]
        profiles = [AppProfile(**p) for p in doc["app_profiles"]]
    except (KeyError, TypeError, IndexError) as exc:
        raise CorruptSnapshot(f"{path}: {exc}") from exc
    kb = KnowledgeBase(
        nodes=nodes, arcs=arcs, state=state, app_profiles=profiles, schema_version=version
    )
    _check_integrity(kb, path)
    return kb


def _check_integrity(kb: KnowledgeBase, path) -> None:
    n = kb.n_nodes
    if len(kb.state) != n:
        raise CorruptSnapshot(f"{path}: {len(kb.state)} state records for {n} nodes")
    for arc in kb.arcs:
        if not (0 <= arc.src < n and 0 <= arc.dst < n):
            raise CorruptSnapshot(f"{path}: arc ({arc.src}, {arc.dst}) out of range")
