import pytest
from fastapi.testclient import TestClient

from ndtwin.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


def run_config(out_dir, seed=7, max_epochs=5):
    return {
        "seed": seed,
        "synth": {"nodes": 40, "geo_radius_km": 400.0},
        "graph": {"geo_radius_km": 400.0, "sim_threshold": 1.0},
        "model": {"hidden_dim": 8, "pe_dim": 4, "heads": 2},
        "training": {"max_epochs": max_epochs},
        "output": {"dir": str(out_dir)},
    }


class TestHealth:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"


class TestPipelineEndpoints:
    def test_full_flow(self, client, tmp_path):
        cfg = run_config(tmp_path)

        r = client.post("/pipeline/synth", json={"config": cfg})
        assert r.status_code == 200
        assert r.json()["nodes"] == 40

        r = client.post("/pipeline/build", json={"config": cfg})
        assert r.status_code == 200
        assert r.json()["stats"]["nodes"] == 40

        r = client.post("/pipeline/train", json={"config": cfg, "architecture": "all"})
        assert r.status_code == 200
        assert [e["architecture"] for e in r.json()["results"]] == [
            "sage", "cheb", "resgated", "transformer",
        ]

        r = client.post("/pipeline/evaluate", json={"config": cfg})
        assert r.status_code == 200
        body = r.json()
        assert len(body["ranking"]) == 4
        assert "rank" in body["table"]

        r = client.post("/pipeline/qoe", json={"config": cfg, "architecture": "sage"})
        assert r.status_code == 200
        assert r.json()["rows"] == 40

        r = client.post("/pipeline/report", json={"config": cfg})
        assert r.status_code == 200

    def test_build_without_summaries_is_422(self, client, tmp_path):
        r = client.post("/pipeline/build", json={"config": run_config(tmp_path)})
        assert r.status_code == 422
        assert r.json()["error_code"] == "missing_input"

    def test_unknown_architecture_is_400(self, client, tmp_path):
        cfg = run_config(tmp_path)
        client.post("/pipeline/synth", json={"config": cfg})
        client.post("/pipeline/build", json={"config": cfg})
        r = client.post("/pipeline/train", json={"config": cfg, "architecture": "gcn"})
        assert r.status_code == 400
        assert r.json()["error_code"] == "usage"

    def test_ingest_without_inputs_is_422(self, client, tmp_path):
        r = client.post("/pipeline/ingest", json={"config": run_config(tmp_path)})
        assert r.status_code == 422

    def test_config_typo_rejected(self, client, tmp_path):
        cfg = run_config(tmp_path)
        cfg["training"]["learning_rate"] = 0.1  # not a known key
        r = client.post("/pipeline/synth", json={"config": cfg})
        assert r.status_code == 422  # pydantic extra-forbid validation


class TestTwinEndpoints:
    def test_stats_before_load(self, client):
        body = client.get("/twin/stats").json()
        assert body["loaded"] is False

    def test_predict_before_load_is_422(self, client):
        r = client.post("/twin/predict", json={"node_indices": [0]})
        assert r.status_code == 422

    def test_load_and_predict(self, client, tmp_path):
        cfg = run_config(tmp_path)
        client.post("/pipeline/synth", json={"config": cfg})
        client.post("/pipeline/build", json={"config": cfg})
        client.post("/pipeline/train", json={"config": cfg, "architecture": "sage"})

        r = client.post("/twin/load", json={"config": cfg, "architecture": "sage"})
        assert r.status_code == 200
        assert r.json()["nodes"] == 40

        stats = client.get("/twin/stats").json()
        assert stats["loaded"] is True
        assert stats["architecture"] == "sage"

        r = client.post("/twin/predict", json={"node_indices": [0, 5, 39]})
        assert r.status_code == 200
        predictions = r.json()["predictions"]
        assert [p["node_index"] for p in predictions] == [0, 5, 39]
        for p in predictions:
            assert p["rtt_ms"] >= 0.0
            assert 0.0 <= p["loss_pct"] <= 100.0
            assert set(p["qoe"]) == {
                "web_browsing", "video_streaming", "voip", "gaming", "file_transfer",
            }
            assert all(0.0 <= q <= 1.0 for q in p["qoe"].values())

    def test_predict_out_of_range_node(self, client, tmp_path):
        cfg = run_config(tmp_path)
        client.post("/pipeline/synth", json={"config": cfg})
        client.post("/pipeline/build", json={"config": cfg})
        client.post("/pipeline/train", json={"config": cfg, "architecture": "sage"})
        client.post("/twin/load", json={"config": cfg, "architecture": "sage"})
        r = client.post("/twin/predict", json={"node_indices": [999]})
        assert r.status_code == 400
