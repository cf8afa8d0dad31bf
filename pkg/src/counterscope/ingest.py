"""Ingestion of externally collected profiler records.

GPU execution happens elsewhere; this module adapts its outputs. It parses
CSV or JSON-lines counter dumps (with a column mapping), derives the twelve
wire metrics from low-level counters, validates pre-derived records against
the normalization ranges, and expands kernels across compiler-flag and
architecture combinations into build-job manifests for external profiling
scripts.

Low-level column vocabulary (canonical names; remap via ``mapping``):

    kernel_id, fingerprint, architecture, compiler_flags, toolkit_version,
    total_flops, l1_bytes, l2_bytes, hbm_read_bytes, hbm_write_bytes,
    duration_s, l1_requests, l1_hits, l2_requests, l2_hits

``duration_s`` is the profiler-reported kernel time, not wall time. This
vocabulary is a practical reconstruction of what common GPU profilers emit,
not a vendor schema. GB and GFLOP use decimal 1e9 throughout.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError, InputValidationError, RangeViolationError
from .metrics import CounterVector, Metric, NormRanges, normalize

GIGA = 1e9

ORIGINS = ("synthetic", "ai", "custom", "oracle")

LOW_LEVEL_COLUMNS = (
    "total_flops",
    "l1_bytes",
    "l2_bytes",
    "hbm_read_bytes",
    "hbm_write_bytes",
    "duration_s",
    "l1_requests",
    "l1_hits",
    "l2_requests",
    "l2_hits",
)
META_COLUMNS = ("kernel_id", "fingerprint", "architecture", "compiler_flags", "toolkit_version")


@dataclass(frozen=True)
class BuildConfig:
    """One compile/profile configuration."""

    architecture: str
    compiler_flags: tuple[str, ...] = ()
    toolkit_version: str = ""

    def __post_init__(self):
        if not self.architecture:
            raise ConfigError("architecture must be non-empty")
        object.__setattr__(self, "compiler_flags", tuple(self.compiler_flags))

    @property
    def flags_string(self) -> str:
        return " ".join(self.compiler_flags)

    @classmethod
    def from_flags_string(cls, architecture: str, flags: str, toolkit_version: str = ""):
        return cls(architecture, tuple(flags.split()), toolkit_version)


@dataclass
class ProfileRecord:
    """One profiled kernel run: low-level counters or pre-derived metrics."""

    kernel_id: str
    config: BuildConfig
    fingerprint: str = ""
    counters: dict = field(default_factory=dict)  # low-level, canonical names
    derived: CounterVector | None = None
    pre_derived: bool = False


@dataclass(frozen=True)
class RowDiagnostic:
    row: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.message}"


@dataclass(frozen=True)
class LabeledSample:
    """Source text plus its derived counters: one future training sample."""

    source: str
    config: BuildConfig
    counters: CounterVector
    origin: str
    fingerprint: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise DataError(f"origin must be one of {ORIGINS}, got {self.origin!r}")
        if not self.fingerprint:
            raise DataError("labeled sample requires a base fingerprint")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "architecture": self.config.architecture,
            "compiler_flags": list(self.config.compiler_flags),
            "toolkit_version": self.config.toolkit_version,
            "origin": self.origin,
            "fingerprint": self.fingerprint,
            "counters": self.counters.as_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LabeledSample":
        return cls(
            source=doc["source"],
            config=BuildConfig(
                doc["architecture"],
                tuple(doc.get("compiler_flags", ())),
                doc.get("toolkit_version", ""),
            ),
            counters=CounterVector(doc["counters"]),
            origin=doc["origin"],
            fingerprint=doc["fingerprint"],
        )


def _rows_of(path: Path) -> list[dict]:
    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def ingest(
    path,
    mapping: dict | None = None,
    ranges: NormRanges | None = None,
) -> tuple[list[ProfileRecord], list[RowDiagnostic]]:
    """Parse a profiler dump into records; rejected rows become diagnostics.

    ``mapping`` translates canonical field names to the file's column names
    (identity by default). Rows may carry either the low-level counters or
    the derived wire metrics directly; the latter are flagged ``pre_derived``
    and validated against the normalization ranges.
    """
    path = Path(path)
    mapping = mapping or {}
    ranges = ranges or NormRanges.default()
    rows = _rows_of(path)

    def col(row: dict, name: str):
        return row.get(mapping.get(name, name))

    if rows and mapping:
        header = set(rows[0])
        unknown = [v for v in mapping.values() if v not in header]
        if unknown:
            raise ConfigError(f"mapping names columns not in the file: {unknown}")

    metric_names = {m.value for m in Metric}
    records: list[ProfileRecord] = []
    diagnostics: list[RowDiagnostic] = []
    for i, row in enumerate(rows, start=1):
        try:
            config = BuildConfig(
                architecture=str(col(row, "architecture") or ""),
                compiler_flags=tuple(str(col(row, "compiler_flags") or "").split()),
                toolkit_version=str(col(row, "toolkit_version") or ""),
            )
            derived_cols = {k: row[k] for k in row if k in metric_names and row[k] not in ("", None)}
            if derived_cols:
                counters = CounterVector({k: float(v) for k, v in derived_cols.items()})
                normalize(counters, ranges)  # range validation only
                records.append(
                    ProfileRecord(
                        kernel_id=str(col(row, "kernel_id") or f"row-{i}"),
                        config=config,
                        fingerprint=str(col(row, "fingerprint") or ""),
                        derived=counters,
                        pre_derived=True,
                    )
                )
                continue
            counters = {}
            for name in LOW_LEVEL_COLUMNS:
                value = col(row, name)
                if value in (None, ""):
                    continue
                try:
                    counters[name] = float(value)
                except (TypeError, ValueError):
                    raise DataError(f"non-numeric counter {name}={value!r}") from None
            if "duration_s" not in counters:
                raise DataError("missing duration_s")
            if counters["duration_s"] <= 0:
                raise DataError(f"non-positive duration {counters['duration_s']}")
            for cache in ("l1", "l2"):
                hits, reqs = counters.get(f"{cache}_hits"), counters.get(f"{cache}_requests")
                if hits is not None and reqs is not None and hits > reqs:
                    raise DataError(f"{cache} hits ({hits}) exceed requests ({reqs})")
            records.append(
                ProfileRecord(
                    kernel_id=str(col(row, "kernel_id") or f"row-{i}"),
                    config=config,
                    fingerprint=str(col(row, "fingerprint") or ""),
                    counters=counters,
                )
            )
        except (DataError, ConfigError, RangeViolationError,
                InputValidationError, ValueError) as exc:
            diagnostics.append(RowDiagnostic(i, str(exc)))
    return records, diagnostics


def derive_metrics(record: ProfileRecord) -> CounterVector:
    """Compute the wire metrics from low-level counters.

    Per level: bandwidth = bytes/duration, AI = flops/bytes, GFLOP/s =
    flops/duration; hit rate = hits/requests * 100. A level with zero bytes
    gets no AI entry (absent, not an error); zero requests likewise for hit
    rates. The algebraic identity AI * bandwidth = GFLOP/s holds exactly for
    every level with bytes > 0.
    """
    if record.pre_derived and record.derived is not None:
        return record.derived
    c = record.counters
    if not c:
        raise DataError(f"record {record.kernel_id}: no low-level counters present")
    flops = c.get("total_flops", 0.0)
    duration = c["duration_s"]

    hbm_read = c.get("hbm_read_bytes", 0.0)
    hbm_write = c.get("hbm_write_bytes", 0.0)
    level_bytes = {
        "L1": c.get("l1_bytes", 0.0),
        "L2": c.get("l2_bytes", 0.0),
        "HBM": hbm_read + hbm_write,
    }
    out = {}
    gflops = flops / duration / GIGA
    bw_metric = {"L1": Metric.L1_BW, "L2": Metric.L2_BW}
    ai_metric = {"L1": Metric.L1_AI, "L2": Metric.L2_AI, "HBM": Metric.HBM_AI}
    gf_metric = {"L1": Metric.L1_GFLOPS, "L2": Metric.L2_GFLOPS, "HBM": Metric.HBM_GFLOPS}
    for level, nbytes in level_bytes.items():
        out[gf_metric[level]] = gflops
        if level in bw_metric:
            out[bw_metric[level]] = nbytes / duration / GIGA
        if nbytes > 0:
            out[ai_metric[level]] = flops / nbytes
        elif flops == 0:
            out[ai_metric[level]] = 0.0
    out[Metric.FABRIC_READ_BW] = hbm_read / duration / GIGA
    out[Metric.FABRIC_WRITE_BW] = hbm_write / duration / GIGA
    for cache, metric in (("l1", Metric.L1_HIT_RATE), ("l2", Metric.L2_HIT_RATE)):
        reqs = c.get(f"{cache}_requests")
        hits = c.get(f"{cache}_hits")
        if reqs and hits is not None:
            out[metric] = hits / reqs * 100.0
    return CounterVector(out)


@dataclass(frozen=True)
class BuildJob:
    """One (kernel, flags, architecture) compile-and-profile task."""

    kernel_id: str
    fingerprint: str
    compiler_flags: tuple[str, ...]
    architecture: str

    def to_dict(self) -> dict:
        return {
            "kernel_id": self.kernel_id,
            "fingerprint": self.fingerprint,
            "compiler_flags": list(self.compiler_flags),
            "architecture": self.architecture,
        }


def expand_configs(kernels, flag_sets, architectures) -> list[BuildJob]:
    """Cartesian product kernels x flag sets x architectures, stable order.

    ``kernels`` entries may be (id, fingerprint) pairs, dicts, or objects
    with those attributes. An empty flag-set list degenerates to a single
    empty flag combination (architectures-only expansion).
    """
    architectures = list(architectures)
    if not architectures:
        raise ConfigError("need at least one architecture")
    flag_sets = [tuple(fs) for fs in flag_sets] or [()]
    refs = [_kernel_ref(k) for k in kernels]
    return [
        BuildJob(kid, fp, flags, arch)
        for (kid, fp), flags, arch in itertools.product(refs, flag_sets, architectures)
    ]


def _kernel_ref(kernel) -> tuple[str, str]:
    if isinstance(kernel, dict):
        return str(kernel.get("kernel_id") or kernel.get("id")), str(kernel["fingerprint"])
    if isinstance(kernel, (tuple, list)) and len(kernel) == 2:
        return str(kernel[0]), str(kernel[1])
    kid = getattr(kernel, "kernel_id", None) or getattr(kernel, "id", None)
    return str(kid), str(getattr(kernel, "fingerprint"))


def write_jobs_manifest(jobs: list[BuildJob], path):
    with open(path, "w", encoding="utf-8") as fh:
        for job in jobs:
            fh.write(json.dumps(job.to_dict()) + "\n")


def read_labeled_samples(path) -> list[LabeledSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                samples.append(LabeledSample.from_dict(json.loads(line)))
    return samples


def write_labeled_samples(samples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_dict()) + "\n")
