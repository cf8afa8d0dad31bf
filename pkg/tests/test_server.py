"""HTTP contract of the inference server."""

import pytest
from fastapi.testclient import TestClient

from counterscope.errors import BackendUnavailableError
from counterscope.metrics import Metric, NormalizedCounters, WIRE_KEYS
from counterscope.predict import Backend, BackendRegistry, OracleBackend
from counterscope.server import ServerConfig, create_app

from conftest import SINGLE_FMA_SOURCE


class _DownBackend(Backend):
    id = "down"
    kind = "remote"

    def healthy(self):
        return False

    def predict_normalized(self, req):
        raise BackendUnavailableError(self.id, "always down")


class _SlowBackend(Backend):
    id = "slow"
    kind = "remote"

    def predict_normalized(self, req):
        import time

        time.sleep(1.0)
        return NormalizedCounters({m: 0.5 for m in Metric}), {}


@pytest.fixture
def client():
    return TestClient(create_app(ServerConfig()))


def _predict_body(**overrides):
    body = {
        "source": SINGLE_FMA_SOURCE,
        "architecture": "gfx90a",
        "compiler_flags": "--std=c++17 -O3",
        "request_id": 7,
    }
    body.update(overrides)
    return body


class TestPredictEndpoint:
    def test_happy_path(self, client, ranges):
        resp = client.post("/v1/predict", json=_predict_body())
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["request_id"] == 7
        assert doc["backend"] == "oracle"
        assert doc["latency_ms"] >= 0
        assert list(doc["normalized"].keys()) == list(WIRE_KEYS)
        assert doc["normalized"]["architecture"] == "gfx90a"
        # physical values carry units and match denormalization
        l1 = doc["physical"]["L1_Cache_Bandwidth"]
        assert l1["unit"] == "GB/s"
        assert l1["value"] == pytest.approx(
            float(doc["normalized"]["L1_Cache_Bandwidth"]) * 16384.0
        )
        levels = [p["level"] for p in doc["roofline"]]
        assert levels == ["L1", "L2", "HBM"]

    def test_missing_source_is_400(self, client):
        body = _predict_body()
        del body["source"]
        assert client.post("/v1/predict", json=body).status_code == 400

    def test_malformed_json_is_400(self, client):
        resp = client.post(
            "/v1/predict", content=b"{not json", headers={"Content-Type": "application/json"}
        )
        assert resp.status_code == 400

    def test_oversize_source_is_413(self):
        app = create_app(ServerConfig(size_limit_bytes=64))
        client = TestClient(app)
        resp = client.post("/v1/predict", json=_predict_body(source="x" * 100))
        assert resp.status_code == 413

    def test_unsupported_architecture_is_400(self, client):
        resp = client.post("/v1/predict", json=_predict_body(architecture="gfx000"))
        assert resp.status_code == 400

    def test_unparseable_source_is_422_with_kind(self, client):
        resp = client.post("/v1/predict", json=_predict_body(source="int main() {}"))
        assert resp.status_code == 422
        assert resp.json()["error"]["kind"] == "oracle_unavailable"

    def test_unknown_backend_is_400(self, client):
        resp = client.post("/v1/predict", json=_predict_body(backend="nope"))
        assert resp.status_code == 400

    def test_down_backend_is_503(self):
        registry = BackendRegistry()
        registry.register(OracleBackend())
        registry.register(_DownBackend())
        client = TestClient(create_app(ServerConfig(), registry=registry))
        resp = client.post("/v1/predict", json=_predict_body(backend="down"))
        assert resp.status_code == 503
        assert resp.json()["error"]["backend"] == "down"

    def test_slow_backend_times_out_504(self):
        registry = BackendRegistry()
        registry.register(OracleBackend())
        registry.register(_SlowBackend())
        client = TestClient(create_app(ServerConfig(timeout_s=0.1), registry=registry))
        resp = client.post("/v1/predict", json=_predict_body(backend="slow"))
        assert resp.status_code == 504

    def test_request_id_echoed_verbatim(self, client):
        for rid in (0, 3, 12345):
            doc = client.post("/v1/predict", json=_predict_body(request_id=rid)).json()
            assert doc["request_id"] == rid


class TestDiscoveryEndpoints:
    def test_backends_listing(self, client):
        doc = client.get("/v1/backends").json()
        assert doc["default"] == "oracle"
        ids = [b["id"] for b in doc["backends"]]
        assert "oracle" in ids
        oracle = next(b for b in doc["backends"] if b["id"] == "oracle")
        assert oracle["healthy"] is True
        assert "peaks" in oracle

    def test_health_ok(self, client):
        doc = client.get("/v1/health").json()
        assert doc["status"] == "ok"
        assert doc["uptime_s"] >= 0

    def test_health_degraded_when_all_down(self):
        registry = BackendRegistry()
        registry.register(_DownBackend())
        client = TestClient(create_app(ServerConfig(), registry=registry))
        resp = client.get("/v1/health")
        assert resp.status_code == 200  # liveness, not readiness
        assert resp.json()["status"] == "degraded"


class TestServerConfig:
    def test_env_overrides(self, monkeypatch, tmp_path):
        path = tmp_path / "server.json"
        path.write_text('{"port": 1234, "timeout_s": 9.0}')
        monkeypatch.setenv("COUNTERSCOPE_PORT", "4321")
        config = ServerConfig.load(path)
        assert config.port == 4321
        assert config.timeout_s == 9.0

    def test_invalid_timeout_rejected(self):
        with pytest.raises(Exception):
            ServerConfig(timeout_s=0)
