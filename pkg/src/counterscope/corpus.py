"""Harvesting AI-generated kernels from a chat-completion endpoint.

Targets any provider speaking the common chat-completion JSON POST (messages
array, model, temperature); credentials come from an environment variable.
Raw responses land in an append-only JSONL log *before* any post-processing,
so reprocessing never re-spends API calls. Kernels that fail to compile are
excluded by ``compile_filter`` when an external compiler is available;
without one, statuses stay ``unknown`` and the report says so.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import requests

from .errors import DataError, HarvestError
from .prompts import HARVEST_SYSTEM_PROMPT

#: Leading words that make a variant read as a trailing clause
#: ("reduction kernel that uses shared memory") instead of an adjective.
_CLAUSE_STARTERS = ("that", "which", "using", "with", "without")


@dataclass(frozen=True)
class PromptJob:
    """One generation request: problem family, phrasing variant, temperature."""

    problem: str
    variant: str = ""
    temperature: float = 0.7
    model: str = "gpt-4o"
    tag: str = ""

    def __post_init__(self):
        if self.temperature < 0:
            raise DataError(f"temperature must be >= 0, got {self.temperature}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "PromptJob":
        return cls(**{k: doc[k] for k in ("problem", "variant", "temperature", "model", "tag") if k in doc})


def build_prompt(job: PromptJob) -> tuple[str, str]:
    """(system, user) texts. Adjective variants go before the problem name,
    clause variants after the word "kernel"."""
    variant = job.variant.strip()
    if not variant:
        user = f"Generate a {job.problem} kernel"
    elif variant.split()[0].lower() in _CLAUSE_STARTERS:
        user = f"Generate a {job.problem} kernel {variant}"
    else:
        user = f"Generate a {variant} {job.problem} kernel"
    return HARVEST_SYSTEM_PROMPT, user


@dataclass
class HarvestedKernel:
    source: str
    job: PromptJob
    status: str = "unknown"  # unknown -> ok | failed, one-way
    failure_log: str = ""
    timestamp: str = ""

    def mark(self, status: str, failure_log: str = ""):
        if self.status != "unknown":
            raise DataError(f"status already {self.status}; transitions are one-way")
        if status not in ("ok", "failed"):
            raise DataError(f"status must be ok or failed, got {status!r}")
        self.status = status
        self.failure_log = failure_log

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "status": self.status,
            "failure_log": self.failure_log,
            "timestamp": self.timestamp,
            "job": self.job.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HarvestedKernel":
        return cls(
            source=doc["source"],
            job=PromptJob.from_dict(doc["job"]),
            status=doc.get("status", "unknown"),
            failure_log=doc.get("failure_log", ""),
            timestamp=doc.get("timestamp", ""),
        )


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    api_key_env: str = "COUNTERSCOPE_API_KEY"
    timeout_s: float = 120.0
    max_retries: int = 3
    backoff_s: float = 0.5


@dataclass
class HarvestResult:
    kernels: list[HarvestedKernel] = field(default_factory=list)
    errors: list[HarvestError] = field(default_factory=list)
    retries: int = 0


_FENCE_RE = re.compile(r"```[a-zA-Z+]*\s*\n(.*?)```", re.DOTALL)


def strip_markdown_fences(text: str) -> str:
    """Models sometimes fence the code despite instructions; keep the largest
    fenced block's content in that case, otherwise the text as-is."""
    blocks = _FENCE_RE.findall(text)
    if blocks:
        return max(blocks, key=len).strip("\n")
    return text


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class _RawLog:
    """Append-only, single-writer JSONL log of raw completions."""

    def __init__(self, path):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict):
        if self.path is None:
            return
        line = json.dumps(record, ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def _request_completion(
    session: requests.Session, endpoint: EndpointConfig, job: PromptJob, result: HarvestResult
) -> str:
    system, user = build_prompt(job)
    payload = {
        "model": job.model,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
        "temperature": job.temperature,
    }
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(endpoint.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error = None
    for attempt in range(endpoint.max_retries + 1):
        if attempt:
            time.sleep(endpoint.backoff_s * (2 ** (attempt - 1)))
            result.retries += 1
        try:
            resp = session.post(
                endpoint.url, json=payload, headers=headers, timeout=endpoint.timeout_s
            )
        except requests.RequestException as exc:
            last_error = HarvestError("network", str(exc), job)
            continue
        if resp.status_code in (401, 403):
            raise HarvestError("auth", f"endpoint returned {resp.status_code}", job)
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = HarvestError(
                "rate_limit" if resp.status_code == 429 else "server",
                f"endpoint returned {resp.status_code}",
                job,
            )
            continue
        if resp.status_code != 200:
            raise HarvestError("http", f"endpoint returned {resp.status_code}", job)
        try:
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise HarvestError("malformed_response", f"cannot read completion: {exc}", job) from exc
    raise last_error or HarvestError("network", "request never attempted", job)


def harvest(
    jobs,
    endpoint: EndpointConfig,
    concurrency: int = 4,
    log_path=None,
) -> HarvestResult:
    """Run all jobs with bounded concurrency; failures never drop completed
    work (results are appended to the raw log as they arrive)."""
    jobs = list(jobs)
    log = _RawLog(log_path)
    result = HarvestResult()
    lock = threading.Lock()
    session = requests.Session()

    def run(job: PromptJob):
        try:
            content = _request_completion(session, endpoint, job, result)
        except HarvestError as exc:
            with lock:
                result.errors.append(exc)
            return
        stamp = _timestamp()
        log.append({"job": job.to_dict(), "raw_response": content, "timestamp": stamp})
        kernel = HarvestedKernel(
            source=strip_markdown_fences(content), job=job, timestamp=stamp
        )
        with lock:
            result.kernels.append(kernel)

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        list(pool.map(run, jobs))
    return result


@dataclass
class FilterReport:
    kept: list[HarvestedKernel] = field(default_factory=list)
    excluded: list[HarvestedKernel] = field(default_factory=list)
    skipped: bool = False  # compiler missing; statuses left unknown

    @property
    def exclusion_rate(self) -> float:
        total = len(self.kept) + len(self.excluded)
        return len(self.excluded) / total if total else 0.0

    def summary(self) -> str:
        if self.skipped:
            return "compile filter skipped (compiler not available); statuses unknown"
        return (
            f"compile filter: kept {len(self.kept)}, excluded {len(self.excluded)} "
            f"({self.exclusion_rate:.1%}); covers compile failures only, not "
            "profiling failures"
        )


def compile_filter(kernels, command_template: str, concurrency: int = 4) -> FilterReport:
    """Compile each kernel in an isolated temp directory; exit 0 keeps it.

    ``command_template`` uses ``{src}`` and ``{out}`` placeholders, e.g.
    ``"hipcc -c {src} -o {out}"``. A missing compiler skips the whole filter
    (statuses stay unknown; nothing is silently marked ok). Already-decided
    kernels are untouched, so filtering is idempotent.
    """
    kernels = list(kernels)
    report = FilterReport()
    probe = shlex.split(command_template.format(src="probe.cpp", out="probe.o"))
    if not probe or shutil.which(probe[0]) is None:
        report.skipped = True
        return report

    pending = [k for k in kernels if k.status == "unknown"]
    for kernel in kernels:
        if kernel.status == "ok":
            report.kept.append(kernel)
        elif kernel.status == "failed":
            report.excluded.append(kernel)

    def run(kernel: HarvestedKernel):
        with tempfile.TemporaryDirectory(prefix="cscope-compile-") as tmp:
            src = Path(tmp) / "kernel.cpp"
            out = Path(tmp) / "kernel.o"
            src.write_text(kernel.source, encoding="utf-8")
            cmd = shlex.split(command_template.format(src=str(src), out=str(out)))
            proc = subprocess.run(cmd, capture_output=True, text=True, cwd=tmp)
            if proc.returncode == 0:
                kernel.mark("ok")
            else:
                kernel.mark("failed", (proc.stderr or proc.stdout)[-4000:])

    with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
        list(pool.map(run, pending))
    for kernel in pending:
        (report.kept if kernel.status == "ok" else report.excluded).append(kernel)
    return report


def write_corpus(kernels, path):
    with open(path, "w", encoding="utf-8") as fh:
        for kernel in kernels:
            fh.write(json.dumps(kernel.to_dict(), ensure_ascii=False) + "\n")


def read_corpus(path) -> list[HarvestedKernel]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(HarvestedKernel.from_dict(json.loads(line)))
    return out
