import json
import math

import numpy as np
import pytest

from ndtwin.errors import CorruptSnapshot, MissingCoordinates, TooFewNodes, VersionMismatch
from ndtwin.kgraph import (
    SCHEMA_VERSION,
    build_topology,
    compute_node_metrics,
    graph_stats,
    haversine_km,
    snapshot_load,
    snapshot_save,
)

from conftest import make_summary


def law_of_cosines_km(lat_a, lon_a, lat_b, lon_b):
    """Independent great-circle oracle (spherical law of cosines)."""
    pa, pb = math.radians(lat_a), math.radians(lat_b)
    dl = math.radians(lon_b - lon_a)
    cos_c = math.sin(pa) * math.sin(pb) + math.cos(pa) * math.cos(pb) * math.cos(dl)
    return 6371.0 * math.acos(max(-1.0, min(1.0, cos_c)))


class TestHaversine:
    def test_identical_points(self):
        assert haversine_km(52.5, 13.4, 52.5, 13.4) == 0.0

    def test_half_circumference(self):
        assert haversine_km(0, 0, 0, 180) == pytest.approx(math.pi * 6371.0, abs=1e-6)

    def test_berlin_hamburg(self):
        d = haversine_km(52.52, 13.405, 53.551, 9.994)
        oracle = law_of_cosines_km(52.52, 13.405, 53.551, 9.994)
        assert d == pytest.approx(oracle, abs=1e-6)
        assert d == pytest.approx(255.0, abs=2.0)

    def test_symmetry_on_random_pairs(self, rng):
        for _ in range(200):
            a = rng.uniform(-90, 90), rng.uniform(-180, 180)
            b = rng.uniform(-90, 90), rng.uniform(-180, 180)
            assert haversine_km(*a, *b) == pytest.approx(haversine_km(*b, *a), abs=1e-9)
            assert haversine_km(*a, *b) == pytest.approx(law_of_cosines_km(*a, *b), abs=1e-5)


class TestBuildTopology:
    def test_identical_coordinates_connect_geo(self):
        summaries = [
            make_summary(probe_id=1, rtt=10.0, jitter=1.0, loss=0.0),
            make_summary(probe_id=2, rtt=90.0, jitter=9.0, loss=5.0),
        ]
        kb = build_topology(summaries, geo_radius_km=100.0, sim_threshold=2.0)
        pairs = {(a.src, a.dst): a.reason for a in kb.arcs}
        assert pairs == {(0, 1): "geo", (1, 0): "geo"}

    def test_berlin_hamburg_within_300km(self):
        summaries = [
            make_summary(probe_id=1, lat=52.52, lon=13.405, rtt=10, jitter=1, loss=0),
            make_summary(probe_id=2, lat=53.551, lon=9.994, rtt=500, jitter=50, loss=50),
        ]
        kb = build_topology(summaries, geo_radius_km=300.0, sim_threshold=2.0)
        assert kb.n_arcs == 2

    def test_dissimilar_distant_probes_unconnected(self):
        # antipodal-ish and opposite measurement directions
        summaries = [
            make_summary(probe_id=1, lat=45.0, lon=0.0, rtt=10, jitter=1, loss=0),
            make_summary(probe_id=2, lat=-45.0, lon=180.0, rtt=500, jitter=50, loss=50),
        ]
        kb = build_topology(summaries, geo_radius_km=100.0, sim_threshold=0.9)
        assert kb.n_arcs == 0

    def test_similarity_edge_reason(self):
        summaries = [
            make_summary(probe_id=1, lat=45.0, lon=0.0, rtt=10, jitter=1, loss=0),
            make_summary(probe_id=2, lat=-45.0, lon=180.0, rtt=500, jitter=50, loss=50),
            make_summary(probe_id=3, lat=0.0, lon=90.0, rtt=10, jitter=1, loss=0),
        ]
        # probes 1 and 3 have identical measurement vectors -> similarity 1
        kb = build_topology(summaries, geo_radius_km=10.0, sim_threshold=0.99)
        reasons = {(a.src, a.dst): a.reason for a in kb.arcs}
        assert reasons[(0, 2)] == "similarity"
        assert reasons[(2, 0)] == "similarity"

    def test_arc_symmetry_and_determinism(self, rng):
        summaries = [
            make_summary(
                probe_id=i,
                lat=float(rng.uniform(40, 60)),
                lon=float(rng.uniform(0, 20)),
                rtt=float(rng.uniform(5, 100)),
                jitter=float(rng.uniform(0, 10)),
                loss=float(rng.uniform(0, 5)),
            )
            for i in range(30)
        ]
        kb1 = build_topology(summaries, geo_radius_km=400.0, sim_threshold=0.97)
        kb2 = build_topology(summaries, geo_radius_km=400.0, sim_threshold=0.97)
        arcs1 = [(a.src, a.dst, a.reason) for a in kb1.arcs]
        arcs2 = [(a.src, a.dst, a.reason) for a in kb2.arcs]
        assert arcs1 == arcs2
        arc_set = {(a.src, a.dst) for a in kb1.arcs}
        assert all((v, u) in arc_set for u, v in arc_set)
        assert all(u != v for u, v in arc_set)

    def test_too_few_nodes(self):
        with pytest.raises(TooFewNodes):
            build_topology([make_summary()], geo_radius_km=100, sim_threshold=0.9)

    def test_missing_coordinates(self):
        bad = make_summary(probe_id=2)
        bad.latitude = None
        with pytest.raises(MissingCoordinates):
            build_topology([make_summary(), bad], geo_radius_km=100, sim_threshold=0.9)


def _path_graph_kb(n=3):
    summaries = [
        make_summary(probe_id=i, lat=50.0, lon=8.0 + 4.0 * i, rtt=10.0 + 40 * i,
                     jitter=1.0 + i, loss=float(i))
        for i in range(n)
    ]
    # 4 degrees of longitude at lat 50 is ~286 km; radius connects neighbors only
    return build_topology(summaries, geo_radius_km=300.0, sim_threshold=2.0)


class TestNodeMetrics:
    def test_path_graph_middle_node(self):
        kb = _path_graph_kb()
        middle = kb.nodes[1]
        assert middle.degree == 2
        assert middle.centrality == 1.0
        assert kb.nodes[0].degree == 1
        assert kb.nodes[0].centrality == 0.5

    def test_isolated_node(self):
        summaries = [
            make_summary(probe_id=1, lat=50.0, lon=0.0, rtt=10, jitter=1, loss=0),
            make_summary(probe_id=2, lat=50.0, lon=1.0, rtt=20, jitter=2, loss=1),
            make_summary(probe_id=3, lat=-50.0, lon=170.0, rtt=400, jitter=40, loss=30),
        ]
        kb = build_topology(summaries, geo_radius_km=200.0, sim_threshold=2.0)
        assert kb.nodes[2].degree == 0
        assert kb.nodes[2].centrality == 0.0

    def test_complete_graph_centrality_brute_force(self, rng):
        n = 5
        summaries = [
            make_summary(probe_id=i, lat=50.0 + 0.001 * i, lon=8.0, rtt=10 + i,
                         jitter=1, loss=0)
            for i in range(n)
        ]
        kb = build_topology(summaries, geo_radius_km=100.0, sim_threshold=2.0)
        counts = {i: 0 for i in range(n)}
        for arc in kb.arcs:
            counts[arc.src] += 1
        for node in kb.nodes:
            assert node.degree == counts[node.node_index] == n - 1
            assert node.centrality == 1.0
            assert node.connectivity_score == 1.0

    def test_degree_sum_equals_arc_count(self, rng):
        for _ in range(5):
            n = int(rng.integers(5, 50))
            summaries = [
                make_summary(
                    probe_id=i,
                    lat=float(rng.uniform(40, 60)),
                    lon=float(rng.uniform(0, 30)),
                    rtt=float(rng.uniform(5, 200)),
                    jitter=float(rng.uniform(0, 10)),
                    loss=float(rng.uniform(0, 10)),
                )
                for i in range(n)
            ]
            kb = build_topology(summaries, geo_radius_km=500.0, sim_threshold=0.95)
            compute_node_metrics(kb)
            assert sum(nd.degree for nd in kb.nodes) == kb.n_arcs
            assert all(0.0 <= nd.centrality <= 1.0 for nd in kb.nodes)
            assert all(0.0 <= nd.connectivity_score <= 1.0 for nd in kb.nodes)


class TestGraphStats:
    def test_paper_scale_density(self):
        # 989 nodes with 908,752 directed arcs, as in the reference dataset
        density = 908_752 / (989 * 988)
        assert density == pytest.approx(0.930, abs=5e-4)

    def test_empty_arcs(self):
        kb = _path_graph_kb()
        kb.arcs = []
        compute_node_metrics(kb)
        assert graph_stats(kb)["density"] == 0.0

    def test_complete_directed_graph(self):
        summaries = [
            make_summary(probe_id=i, lat=50.0, lon=8.0 + 0.001 * i, rtt=10, jitter=1, loss=0)
            for i in range(4)
        ]
        kb = build_topology(summaries, geo_radius_km=100.0, sim_threshold=2.0)
        stats = graph_stats(kb)
        assert stats["arcs"] == 12
        assert stats["density"] == 1.0
        assert stats["degree_histogram"] == {"3": 4}


class TestSnapshot:
    def test_round_trip_identity(self, tmp_path):
        kb = _path_graph_kb()
        path = tmp_path / "snapshot.json"
        snapshot_save(kb, path)
        loaded = snapshot_load(path)
        assert loaded.schema_version == SCHEMA_VERSION
        assert loaded.nodes == kb.nodes
        assert loaded.arcs == kb.arcs
        assert loaded.state == kb.state
        assert loaded.app_profiles == kb.app_profiles

    def test_save_is_byte_deterministic(self, tmp_path):
        kb = _path_graph_kb()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        snapshot_save(kb, p1)
        snapshot_save(kb, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_future_schema_version(self, tmp_path):
        kb = _path_graph_kb()
        path = tmp_path / "snapshot.json"
        snapshot_save(kb, path)
        doc = json.loads(path.read_text())
        doc["schema_version"] = SCHEMA_VERSION + 1
        path.write_text(json.dumps(doc))
        with pytest.raises(VersionMismatch):
            snapshot_load(path)

    def test_truncated_file(self, tmp_path):
        kb = _path_graph_kb()
        path = tmp_path / "snapshot.json"
        snapshot_save(kb, path)
        path.write_bytes(path.read_bytes()[:100])
        with pytest.raises(CorruptSnapshot):
            snapshot_load(path)

    def test_dangling_arc_detected(self, tmp_path):
        kb = _path_graph_kb()
        path = tmp_path / "snapshot.json"
        snapshot_save(kb, path)
        doc = json.loads(path.read_text())
        doc["arcs"].append([0, 99, "geo"])
        path.write_text(json.dumps(doc))
        with pytest.raises(CorruptSnapshot):
            snapshot_load(path)
