"""HTTP service exposing the backend registry to interactive clients.

Plain request/response JSON over three endpoints:

    POST /v1/predict   {source, architecture, compiler_flags, backend?, request_id?}
    GET  /v1/backends  backend descriptors with live health and peak tables
    GET  /v1/health    {status: ok|degraded, uptime_s}

The server is stateless: it echoes ``request_id`` verbatim and leaves stale
-response suppression to clients. Physical counters in responses are always
recomputed from the quantized normalized block server-side.
"""

from __future__ import annotations

import asyncio
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    BackendUnavailableError,
    ConfigError,
    ExtractionError,
    InputValidationError,
    OracleUnavailableError,
)
from .metrics import METRIC_UNITS, NormRanges, load_peaks
from .predict import (
    BackendRegistry,
    OracleBackend,
    PredictRequest,
    PredictResponse,
    RemoteBackend,
    predict,
)

DEFAULT_SIZE_LIMIT = 1 << 20  # 1 MiB of source


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    size_limit_bytes: int = DEFAULT_SIZE_LIMIT
    timeout_s: float = 30.0
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    ranges_path: str | None = None
    peaks_path: str | None = None
    oracle_efficiency: float = 1.0
    remote_endpoint: str = ""
    remote_model: str = ""
    remote_api_key_env: str = "COUNTERSCOPE_API_KEY"
    default_backend: str = "oracle"

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be > 0")
        if self.size_limit_bytes <= 0:
            raise ConfigError("size_limit_bytes must be > 0")

    @classmethod
    def load(cls, path=None) -> "ServerConfig":
        """Config file plus environment overrides (COUNTERSCOPE_PORT,
        COUNTERSCOPE_HOST, COUNTERSCOPE_REMOTE_ENDPOINT, COUNTERSCOPE_REMOTE_MODEL)."""
        doc = {}
        if path:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = set(cls.__dataclass_fields__)
        config = cls(**{k: v for k, v in doc.items() if k in known})
        if os.environ.get("COUNTERSCOPE_PORT"):
            config.port = int(os.environ["COUNTERSCOPE_PORT"])
        if os.environ.get("COUNTERSCOPE_HOST"):
            config.host = os.environ["COUNTERSCOPE_HOST"]
        if os.environ.get("COUNTERSCOPE_REMOTE_ENDPOINT"):
            config.remote_endpoint = os.environ["COUNTERSCOPE_REMOTE_ENDPOINT"]
        if os.environ.get("COUNTERSCOPE_REMOTE_MODEL"):
            config.remote_model = os.environ["COUNTERSCOPE_REMOTE_MODEL"]
        return config


def build_registry(config: ServerConfig) -> BackendRegistry:
    registry = BackendRegistry()
    peaks = load_peaks(config.peaks_path)
    ranges = NormRanges.load(config.ranges_path) if config.ranges_path else NormRanges.default()
    registry.register(
        OracleBackend(peaks, ranges, efficiency=config.oracle_efficiency),
        default=config.default_backend == "oracle",
    )
    if config.remote_endpoint:
        registry.register(
            RemoteBackend(
                endpoint_url=config.remote_endpoint,
                model=config.remote_model,
                api_key_env=config.remote_api_key_env,
            ),
            default=config.default_backend == "remote",
        )
    return registry


def _error_body(status: str, message: str, **extra) -> dict:
    return {"error": {"kind": status, "message": message, **extra}}


def response_to_json(resp: PredictResponse) -> dict:
    normalized = {
        "compiler_flags": resp.config_echo.get("compiler_flags", ""),
        "architecture": resp.config_echo.get("architecture", ""),
        **resp.normalized.as_strings(),
    }
    physical = {
        metric.value: {"value": value, "unit": METRIC_UNITS[metric]}
        for metric, value in resp.physical.items()
    }
    return {
        "request_id": resp.request_id,
        "backend": resp.backend_id,
        "latency_ms": resp.latency_ms,
        "normalized": normalized,
        "physical": physical,
        "roofline": [
            {"level": p.level.value, "ai": p.ai, "gflops": p.gflops} for p in resp.roofline
        ],
        "warnings": list(resp.warnings),
    }


def create_app(
    config: ServerConfig | None = None,
    registry: BackendRegistry | None = None,
    ranges: NormRanges | None = None,
) -> FastAPI:
    config = config or ServerConfig()
    registry = registry or build_registry(config)
    ranges = ranges or (
        NormRanges.load(config.ranges_path) if config.ranges_path else NormRanges.default()
    )
    app = FastAPI(title="counterscope inference server", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    started = time.monotonic()

    @app.post("/v1/predict")
    async def predict_endpoint(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(_error_body("bad_request", "body is not valid JSON"), 400)
        if not isinstance(body, dict):
            return JSONResponse(_error_body("bad_request", "body must be a JSON object"), 400)

        source = body.get("source")
        architecture = body.get("architecture")
        if not isinstance(source, str) or not source:
            return JSONResponse(_error_body("bad_request", "missing or empty 'source'"), 400)
        if not isinstance(architecture, str) or not architecture:
            return JSONResponse(_error_body("bad_request", "missing or empty 'architecture'"), 400)
        if len(source.encode("utf-8", errors="ignore")) > config.size_limit_bytes:
            return JSONResponse(
                _error_body("payload_too_large",
                            f"source exceeds {config.size_limit_bytes} bytes"), 413)
        compiler_flags = body.get("compiler_flags", "")
        if not isinstance(compiler_flags, str):
            return JSONResponse(_error_body("bad_request", "'compiler_flags' must be a string"), 400)
        request_id = body.get("request_id", 0)
        if not isinstance(request_id, int):
            return JSONResponse(_error_body("bad_request", "'request_id' must be an integer"), 400)

        try:
            backend = registry.get(body.get("backend"))
        except ConfigError as exc:
            return JSONResponse(_error_body("bad_request", str(exc)), 400)

        req = PredictRequest(
            source=source,
            architecture=architecture,
            compiler_flags=compiler_flags,
            request_id=request_id,
        )
        try:
            resp = await asyncio.wait_for(
                run_in_threadpool(predict, backend, req, ranges),
                timeout=config.timeout_s,
            )
        except asyncio.TimeoutError:
            return JSONResponse(
                _error_body("timeout", f"backend call exceeded {config.timeout_s}s",
                            backend=backend.id), 504)
        except ExtractionError as exc:
            return JSONResponse(
                _error_body(exc.kind, str(exc), backend=backend.id,
                            raw_text=exc.raw_text[-4000:]), 422)
        except OracleUnavailableError as exc:
            return JSONResponse(
                _error_body("oracle_unavailable", str(exc), backend=backend.id), 422)
        except BackendUnavailableError as exc:
            return JSONResponse(
                _error_body("backend_unavailable", str(exc), backend=exc.backend_id), 503)
        except (InputValidationError, ConfigError) as exc:
            return JSONResponse(_error_body("bad_request", str(exc)), 400)
        return JSONResponse(response_to_json(resp), 200)

    @app.get("/v1/backends")
    async def backends_endpoint():
        return JSONResponse({"backends": registry.descriptors(),
                             "default": registry.default_id}, 200)

    @app.get("/v1/health")
    async def health_endpoint():
        status = "ok" if registry.any_healthy() else "degraded"
        return JSONResponse({"status": status, "uptime_s": time.monotonic() - started}, 200)

    return app


def run_server(config: ServerConfig):
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="info")
