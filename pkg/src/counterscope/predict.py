"""Prediction backends: source + configuration in, normalized counters out.

Two backends ship: the analytic oracle (exact counters for generator-shaped
kernels, refuses anything else) and a remote client for any chat-completion
service hosting a fine-tuned model. Both speak the same contract, so the
server, the evaluation harness, and the editor panel do not care which one
answers. The remote client builds its user prompt with the exact renderer
the dataset builder uses — training/serving parity is structural, not a
convention.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass, field

import requests

from .errors import (
    BackendUnavailableError,
    ConfigError,
    ExtractionError,
    InputValidationError,
)
from .kernelsrc.oracle import DEFAULT_HIT_RATES, HitRateModel, oracle_counters
from .metrics import (
    ARCHITECTURE_KEY,
    COMPILER_FLAGS_KEY,
    CounterVector,
    MachinePeaks,
    NormRanges,
    NormalizedCounters,
    RooflinePoint,
    denormalize,
    load_peaks,
    normalize,
    parse_counter_block,
    roofline_points,
)
from .prompts import PREDICT_SYSTEM_PROMPT, render_user_prompt


@dataclass(frozen=True)
class PredictRequest:
    source: str
    architecture: str
    compiler_flags: str = ""
    request_id: int = 0

    def __post_init__(self):
        if not self.source:
            raise InputValidationError("source must be non-empty")
        if not self.architecture:
            raise InputValidationError("architecture must be non-empty")


@dataclass(frozen=True)
class PredictResponse:
    request_id: int
    backend_id: str
    latency_ms: float
    normalized: NormalizedCounters
    physical: CounterVector
    roofline: list[RooflinePoint]
    config_echo: dict
    warnings: tuple[str, ...] = ()


class Backend:
    """Prediction backend contract.

    Implementations provide ``predict_normalized`` returning the normalized
    counters plus the {compiler_flags, architecture} echo, and declare
    whether concurrent calls are safe (the registry serializes them if not).
    """

    id: str = "backend"
    kind: str = "remote"
    architectures: tuple[str, ...] = ()
    concurrency_safe: bool = True

    def healthy(self) -> bool:
        return True

    def predict_normalized(self, req: PredictRequest) -> tuple[NormalizedCounters, dict]:
        raise NotImplementedError

    def describe(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "architectures": list(self.architectures),
            "healthy": self.healthy(),
        }


class OracleBackend(Backend):
    """Analytic backend: exact streaming-model counters for generated kernels.

    Requires generator metadata — embedded comment header or a source that
    re-parses under the strict grammar. Arbitrary code is refused rather
    than guessed at (``OracleUnavailableError`` -> unprocessable request).
    """

    kind = "oracle"
    concurrency_safe = True

    def __init__(
        self,
        peaks_table: dict[str, MachinePeaks] | None = None,
        ranges: NormRanges | None = None,
        efficiency: float = 1.0,
        hit_rates: HitRateModel = DEFAULT_HIT_RATES,
        backend_id: str = "oracle",
    ):
        self.id = backend_id
        self.peaks_table = peaks_table or load_peaks()
        self.ranges = ranges or NormRanges.default()
        self.efficiency = efficiency
        self.hit_rates = hit_rates
        self.architectures = tuple(sorted(self.peaks_table))

    def predict_normalized(self, req: PredictRequest):
        try:
            peaks = self.peaks_table[req.architecture]
        except KeyError:
            raise ConfigError(
                f"architecture {req.architecture!r} not in the oracle peaks table "
                f"(have {sorted(self.peaks_table)})"
            ) from None
        counters = oracle_counters(
            req.source, peaks, efficiency=self.efficiency, hit_rates=self.hit_rates
        )
        norm = normalize(counters, self.ranges)
        echo = {COMPILER_FLAGS_KEY: req.compiler_flags, ARCHITECTURE_KEY: req.architecture}
        return norm, echo

    def describe(self) -> dict:
        doc = super().describe()
        doc["peaks"] = {
            arch: {
                "peak_gflops": peaks.peak_gflops,
                "bandwidth_gbps": {lvl.value: bw for lvl, bw in peaks.bandwidth_gbps.items()},
            }
            for arch, peaks in self.peaks_table.items()
        }
        return doc


_JSON_FENCE_RE = re.compile(r"```json\s*\n(.*?)```", re.DOTALL)


def _first_balanced_object(text: str) -> str | None:
    start = text.find("{")
    while start >= 0:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            c = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
                continue
            if c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find("{", start + 1)
    return None


def extract_json(model_output: str, strict: bool = True) -> tuple[NormalizedCounters, dict]:
    """Locate and validate the counter block in raw model output.

    Exactly one ```json fence is expected; without any fence, the first
    balanced top-level JSON object is tried. Key set, string values, and the
    [0, 1] bounds are enforced (strict mode tolerates nothing extra). Every
    failure carries a distinct kind and the raw text for postmortem.
    """
    blocks = _JSON_FENCE_RE.findall(model_output)
    if len(blocks) > 1:
        raise ExtractionError(
            "ambiguous_blocks", f"{len(blocks)} json fences found", model_output
        )
    if blocks:
        return parse_counter_block(blocks[0], strict=strict)
    fallback = _first_balanced_object(model_output)
    if fallback is None:
        raise ExtractionError("no_block", "no JSON block in model output", model_output)
    return parse_counter_block(fallback, strict=strict)


class RemoteBackend(Backend):
    """Client for a chat-completion service hosting a counter-prediction model."""

    kind = "remote"
    concurrency_safe = True

    def __init__(
        self,
        endpoint_url: str,
        model: str = "",
        api_key_env: str = "COUNTERSCOPE_API_KEY",
        temperature: float = 0.0,
        timeout_s: float = 60.0,
        max_retries: int = 1,
        strict: bool = True,
        architectures: tuple[str, ...] = ("gfx90a", "gfx942"),
        backend_id: str = "remote",
        decoding_params: dict | None = None,
    ):
        self.id = backend_id
        self.endpoint_url = endpoint_url
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.strict = strict
        self.architectures = tuple(architectures)
        self.decoding_params = dict(decoding_params or {})
        self._session = requests.Session()

    def build_messages(self, req: PredictRequest) -> list[dict]:
        return [
            {"role": "system", "content": PREDICT_SYSTEM_PROMPT},
            {
                "role": "user",
                "content": render_user_prompt(req.source, req.architecture, req.compiler_flags),
            },
        ]

    def _post(self, payload: dict):
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_exc = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(min(2.0, 0.25 * (2 ** (attempt - 1))))
            try:
                return self._session.post(
                    self.endpoint_url, json=payload, headers=headers, timeout=self.timeout_s
                )
            except requests.RequestException as exc:
                last_exc = exc
        raise BackendUnavailableError(self.id, f"endpoint unreachable: {last_exc}")

    def predict_normalized(self, req: PredictRequest):
        payload = {
            "model": self.model,
            "messages": self.build_messages(req),
            "temperature": self.temperature,
            **self.decoding_params,
        }
        resp = self._post(payload)
        if resp.status_code != 200:
            raise BackendUnavailableError(self.id, f"endpoint returned {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ExtractionError(
                "no_block", f"cannot read completion payload: {exc}", resp.text
            ) from exc
        return extract_json(content, strict=self.strict)

    def healthy(self) -> bool:
        return bool(self.endpoint_url)


def predict(backend: Backend, req: PredictRequest, ranges: NormRanges) -> PredictResponse:
    """Run one prediction and derive the physical view.

    The normalized counters are quantized to the 3-decimal wire format and
    the physical counters are recomputed from them here — the response never
    trusts a backend's own denormalization. Echoed configuration that
    disagrees with the request becomes a warning, not an error.
    """
    if not backend.healthy():
        raise BackendUnavailableError(backend.id, "backend reports unhealthy")
    t0 = time.perf_counter()
    norm, echo = backend.predict_normalized(req)
    latency_ms = (time.perf_counter() - t0) * 1000.0

    warnings = []
    if echo.get(ARCHITECTURE_KEY) and echo[ARCHITECTURE_KEY] != req.architecture:
        warnings.append(
            f"architecture echo {echo[ARCHITECTURE_KEY]!r} != request {req.architecture!r}"
        )
    if echo.get(COMPILER_FLAGS_KEY) is not None and echo[COMPILER_FLAGS_KEY] != req.compiler_flags:
        warnings.append(
            f"compiler_flags echo {echo[COMPILER_FLAGS_KEY]!r} != request {req.compiler_flags!r}"
        )

    quantized = norm.quantized()
    physical = denormalize(quantized, ranges)
    return PredictResponse(
        request_id=req.request_id,
        backend_id=backend.id,
        latency_ms=latency_ms,
        normalized=quantized,
        physical=physical,
        roofline=roofline_points(physical),
        config_echo=echo,
        warnings=tuple(warnings),
    )


class _SerializedBackend(Backend):
    """Wrapper enforcing one-at-a-time access for non-thread-safe backends."""

    def __init__(self, inner: Backend):
        self._inner = inner
        self._lock = threading.Lock()
        self.id = inner.id
        self.kind = inner.kind
        self.architectures = inner.architectures
        self.concurrency_safe = True

    def healthy(self) -> bool:
        return self._inner.healthy()

    def predict_normalized(self, req):
        with self._lock:
            return self._inner.predict_normalized(req)

    def describe(self) -> dict:
        doc = self._inner.describe()
        doc["serialized"] = True
        return doc


@dataclass
class BackendRegistry:
    """Backends by id, with a default and per-backend concurrency policy."""

    backends: dict[str, Backend] = field(default_factory=dict)
    default_id: str = ""

    def register(self, backend: Backend, default: bool = False):
        if backend.id in self.backends:
            raise ConfigError(f"backend id {backend.id!r} already registered")
        if not backend.concurrency_safe:
            backend = _SerializedBackend(backend)
        self.backends[backend.id] = backend
        if default or not self.default_id:
            self.default_id = backend.id
        return backend

    def get(self, backend_id: str | None = None) -> Backend:
        key = backend_id or self.default_id
        try:
            return self.backends[key]
        except KeyError:
            raise ConfigError(
                f"unknown backend {key!r}; registered: {sorted(self.backends)}"
            ) from None

    def descriptors(self) -> list[dict]:
        return [b.describe() for b in self.backends.values()]

    def any_healthy(self) -> bool:
        return any(b.healthy() for b in self.backends.values())
