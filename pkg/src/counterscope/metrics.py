"""Metric vocabulary, normalization ranges, and roofline geometry.

Everything downstream (generator oracle, dataset rendering, prediction
backends, evaluation) shares this module's metric ids, [0,1] normalization
math, and the serialized counter-block wire format: a JSON object with 14
keys (two configuration tags plus 12 numeric metrics) in a fixed order,
every numeric value rendered as a string with exactly three fractional
digits.

All types are immutable values; all functions are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterator, Mapping

from .errors import (
    ConfigError,
    DataError,
    ExtractionError,
    InputValidationError,
    RangeViolationError,
)

# Fraction by which a raw value may overshoot its ceiling and still be
# clamped instead of rejected. Profilers routinely report e.g. 100.004% hit
# rates; anything past this slack is treated as a unit bug.
CEILING_SLACK = 1e-3


class Metric(str, Enum):
    """The 12 numeric counter ids. Enum order is the wire order."""

    L1_AI = "L1_Cache_Arithmetic_Intensity"
    L2_AI = "L2_Cache_Arithmetic_Intensity"
    HBM_AI = "HBM_Arithmetic_Intensity"
    L1_GFLOPS = "L1_Cache_GFLOPS"
    L2_GFLOPS = "L2_Cache_GFLOPS"
    HBM_GFLOPS = "HBM_GFLOPS"
    L1_BW = "L1_Cache_Bandwidth"
    L2_BW = "L2_Cache_Bandwidth"
    FABRIC_WRITE_BW = "L2_Fabric_Write_BW"
    FABRIC_READ_BW = "L2_Fabric_Read_BW"
    L1_HIT_RATE = "L1_Cache_Hit_Rate"
    L2_HIT_RATE = "L2_Cache_Hit_Rate"

    def __str__(self) -> str:  # wire name, not Metric.L1_AI
        return self.value


COMPILER_FLAGS_KEY = "compiler_flags"
ARCHITECTURE_KEY = "architecture"

#: Full serialized key order of a counter block (14 keys).
WIRE_KEYS: tuple[str, ...] = (
    COMPILER_FLAGS_KEY,
    ARCHITECTURE_KEY,
    *(m.value for m in Metric),
)

HIT_RATE_METRICS = frozenset({Metric.L1_HIT_RATE, Metric.L2_HIT_RATE})

#: Unit per metric, used in human-facing output.
METRIC_UNITS: dict[Metric, str] = {
    Metric.L1_HIT_RATE: "%",
    Metric.L2_HIT_RATE: "%",
    Metric.L1_BW: "GB/s",
    Metric.L2_BW: "GB/s",
    Metric.FABRIC_READ_BW: "GB/s",
    Metric.FABRIC_WRITE_BW: "GB/s",
    Metric.L1_AI: "FLOPs/Byte",
    Metric.L2_AI: "FLOPs/Byte",
    Metric.HBM_AI: "FLOPs/Byte",
    Metric.L1_GFLOPS: "GFLOP/s",
    Metric.L2_GFLOPS: "GFLOP/s",
    Metric.HBM_GFLOPS: "GFLOP/s",
}


class MemLevel(str, Enum):
    L1 = "L1"
    L2 = "L2"
    HBM = "HBM"


def _coerce_metric(key) -> Metric:
    if isinstance(key, Metric):
        return key
    try:
        return Metric(key)
    except ValueError:
        raise ConfigError(f"unknown metric id {key!r}") from None


def _wire_sorted(values: Mapping[Metric, float]) -> dict[Metric, float]:
    return {m: values[m] for m in Metric if m in values}


@dataclass(frozen=True)
class CounterVector:
    """Per-kernel counters in physical units (%, GB/s, FLOPs/Byte, GFLOP/s).

    May be partial (a metric can be absent, e.g. an arithmetic intensity that
    is undefined because no bytes moved at that level). All present values
    are finite and non-negative; hit rates are capped at 100 (values within
    ``CEILING_SLACK`` above 100 are clamped on construction).
    """

    values: Mapping[Metric, float]

    def __init__(self, values: Mapping):
        coerced: dict[Metric, float] = {}
        for key, value in values.items():
            metric = _coerce_metric(key)
            value = float(value)
            if not math.isfinite(value) or value < 0.0:
                raise InputValidationError(
                    f"{metric.value} must be finite and >= 0, got {value!r}"
                )
            if metric in HIT_RATE_METRICS and value > 100.0:
                if value <= 100.0 * (1.0 + CEILING_SLACK):
                    value = 100.0
                else:
                    raise RangeViolationError(metric.value, value, 0.0, 100.0)
            coerced[metric] = value
        object.__setattr__(self, "values", _wire_sorted(coerced))

    def __getitem__(self, metric) -> float:
        return self.values[_coerce_metric(metric)]

    def __contains__(self, metric) -> bool:
        return _coerce_metric(metric) in self.values

    def __iter__(self) -> Iterator[Metric]:
        return iter(self.values)

    def items(self):
        return self.values.items()

    def is_complete(self) -> bool:
        return len(self.values) == len(Metric)

    def as_dict(self) -> dict[str, float]:
        return {m.value: v for m, v in self.values.items()}


@dataclass(frozen=True)
class NormalizedCounters:
    """Counters mapped to the unit interval against per-metric ceilings.

    The serialization contract renders every value as a string with exactly
    three fractional digits ("0.500"), so a round trip through the wire
    format moves a value by at most 0.0005.
    """

    values: Mapping[Metric, float]

    def __init__(self, values: Mapping):
        coerced: dict[Metric, float] = {}
        for key, value in values.items():
            metric = _coerce_metric(key)
            value = float(value)
            if not (0.0 <= value <= 1.0):
                raise InputValidationError(
                    f"normalized {metric.value} must be in [0, 1], got {value!r}"
                )
            coerced[metric] = value
        object.__setattr__(self, "values", _wire_sorted(coerced))

    def __getitem__(self, metric) -> float:
        return self.values[_coerce_metric(metric)]

    def __contains__(self, metric) -> bool:
        return _coerce_metric(metric) in self.values

    def __iter__(self) -> Iterator[Metric]:
        return iter(self.values)

    def items(self):
        return self.values.items()

    def is_complete(self) -> bool:
        return len(self.values) == len(Metric)

    def as_strings(self) -> dict[str, str]:
        """Wire rendering: metric name -> 3-decimal string, wire order."""
        return {m.value: format_value(v) for m, v in self.values.items()}

    def quantized(self) -> "NormalizedCounters":
        """The vector after one trip through the 3-decimal wire format."""
        return NormalizedCounters({m: quantize(v) for m, v in self.values.items()})


def format_value(value: float) -> str:
    """Render a unit-interval value with exactly 3 fractional digits.

    Uses fixed-point formatting of the IEEE double, which rounds the exact
    binary value half-to-even; deterministic across platforms.
    """
    return f"{value:.3f}"


def quantize(value: float) -> float:
    return float(format_value(value))


@dataclass(frozen=True)
class NormRanges:
    """Per-metric (floor, ceiling) pairs in physical units.

    Shipped defaults cover hit rates 0-100 %, bandwidths 0-16384 GB/s,
    arithmetic intensity 0-2048 FLOPs/Byte (0-5120 at L2), and throughput
    0-12288 GFLOP/s. New architectures can override ceilings through a
    versioned JSON config file; see ``NormRanges.load``.
    """

    ranges: Mapping[Metric, tuple[float, float]]
    version: int = 1

    def __post_init__(self):
        coerced = {}
        for key, (floor, ceiling) in self.ranges.items():
            metric = _coerce_metric(key)
            floor, ceiling = float(floor), float(ceiling)
            if not (ceiling > floor >= 0.0):
                raise ConfigError(
                    f"range for {metric.value} must satisfy ceiling > floor >= 0, "
                    f"got ({floor}, {ceiling})"
                )
            coerced[metric] = (floor, ceiling)
        object.__setattr__(self, "ranges", coerced)

    def floor(self, metric) -> float:
        return self._pair(metric)[0]

    def ceiling(self, metric) -> float:
        return self._pair(metric)[1]

    def span(self, metric) -> float:
        floor, ceiling = self._pair(metric)
        return ceiling - floor

    def _pair(self, metric) -> tuple[float, float]:
        metric = _coerce_metric(metric)
        try:
            return self.ranges[metric]
        except KeyError:
            raise ConfigError(f"no normalization range configured for {metric.value}") from None

    @classmethod
    def from_config(cls, doc: dict) -> "NormRanges":
        try:
            records = doc["ranges"]
            ranges = {r["id"]: (r["floor"], r["ceiling"]) for r in records}
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed range config: {exc}") from exc
        return cls(ranges=ranges, version=int(doc.get("version", 1)))

    @classmethod
    def load(cls, path) -> "NormRanges":
        with open(path, encoding="utf-8") as fh:
            return cls.from_config(json.load(fh))

    @classmethod
    def default(cls) -> "NormRanges":
        text = resources.files("counterscope.data").joinpath("ranges.json").read_text()
        return cls.from_config(json.loads(text))


def normalize(raw: CounterVector, ranges: NormRanges) -> NormalizedCounters:
    """Map raw counters onto [0, 1] per metric: (raw - floor) / (ceiling - floor).

    Values above a ceiling by at most ``CEILING_SLACK`` (profiler noise) are
    clamped to the ceiling; larger overshoots and any value below the floor
    raise ``RangeViolationError`` naming the metric.
    """
    out = {}
    for metric, value in raw.items():
        floor, ceiling = ranges._pair(metric)
        if value > ceiling:
            if value <= ceiling * (1.0 + CEILING_SLACK):
                value = ceiling
            else:
                raise RangeViolationError(metric.value, value, floor, ceiling)
        if value < floor:
            raise RangeViolationError(metric.value, value, floor, ceiling)
        out[metric] = (value - floor) / (ceiling - floor)
    return NormalizedCounters(out)


def denormalize(norm: NormalizedCounters, ranges: NormRanges) -> CounterVector:
    """Inverse of ``normalize``: floor + v * (ceiling - floor) per metric."""
    out = {}
    for metric, value in norm.items():
        floor, ceiling = ranges._pair(metric)
        out[metric] = floor + value * (ceiling - floor)
    return CounterVector(out)


def render_counter_block(
    norm: NormalizedCounters, compiler_flags: str, architecture: str
) -> str:
    """Serialize a complete counter set as the canonical JSON block.

    One key per line, no indentation, fixed 14-key order, all values strings.
    This exact text is what training samples and prediction backends emit.
    """
    if not norm.is_complete():
        missing = [m.value for m in Metric if m not in norm]
        raise InputValidationError(f"cannot render partial counters; missing {missing}")
    obj = {
        COMPILER_FLAGS_KEY: compiler_flags,
        ARCHITECTURE_KEY: architecture,
        **norm.as_strings(),
    }
    return json.dumps(obj, indent=0)


def parse_counter_block(text: str, strict: bool = True) -> tuple[NormalizedCounters, dict]:
    """Parse and validate a serialized counter block (the bare JSON object).

    Returns the normalized counters plus the {compiler_flags, architecture}
    echo. In strict mode the key set must equal the 14 wire keys exactly;
    lenient mode tolerates extra keys (exploratory backends). Raises
    ``ExtractionError`` with a distinct ``kind`` per failure mode.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExtractionError("bad_json", str(exc), text) from exc
    if not isinstance(obj, dict):
        raise ExtractionError("not_object", "counter block is not a JSON object", text)

    missing = [k for k in WIRE_KEYS if k not in obj]
    if missing:
        raise ExtractionError("missing_keys", f"missing keys {missing}", text)
    extra = [k for k in obj if k not in WIRE_KEYS]
    if extra and strict:
        raise ExtractionError("extra_keys", f"unexpected keys {extra}", text)

    config = {
        COMPILER_FLAGS_KEY: str(obj[COMPILER_FLAGS_KEY]),
        ARCHITECTURE_KEY: str(obj[ARCHITECTURE_KEY]),
    }
    values = {}
    for metric in Metric:
        rendered = obj[metric.value]
        if isinstance(rendered, str):
            try:
                value = float(rendered)
            except ValueError:
                raise ExtractionError(
                    "non_numeric", f"{metric.value}={rendered!r} is not numeric", text
                ) from None
        elif isinstance(rendered, (int, float)) and not strict:
            value = float(rendered)
        else:
            raise ExtractionError(
                "non_numeric", f"{metric.value}={rendered!r} is not a string value", text
            )
        if not math.isfinite(value) or not (0.0 <= value <= 1.0):
            raise ExtractionError(
                "out_of_range", f"{metric.value}={value!r} outside [0, 1]", text
            )
        values[metric] = value
    return NormalizedCounters(values), config


def arithmetic_intensity(flops: float, bytes_moved: float) -> float:
    """FLOPs per byte moved. ``bytes_moved`` must be positive."""
    if flops < 0:
        raise DataError(f"flops must be >= 0, got {flops!r}")
    if bytes_moved == 0:
        raise ZeroDivisionError("arithmetic intensity undefined for zero bytes")
    if bytes_moved < 0:
        raise DataError(f"bytes must be > 0, got {bytes_moved!r}")
    return flops / bytes_moved


@dataclass(frozen=True)
class MachinePeaks:
    """Attainable peaks for one architecture: compute (GFLOP/s) and
    per-memory-level bandwidth (GB/s)."""

    architecture: str
    peak_gflops: float
    bandwidth_gbps: Mapping[MemLevel, float]

    def __post_init__(self):
        if self.peak_gflops <= 0:
            raise ConfigError(f"peak compute must be > 0, got {self.peak_gflops!r}")
        coerced = {}
        for key, bw in self.bandwidth_gbps.items():
            level = MemLevel(key)
            if bw <= 0:
                raise ConfigError(f"{level.value} bandwidth must be > 0, got {bw!r}")
            coerced[level] = float(bw)
        object.__setattr__(self, "bandwidth_gbps", coerced)

    def bandwidth(self, level) -> float:
        level = MemLevel(level)
        try:
            return self.bandwidth_gbps[level]
        except KeyError:
            raise ConfigError(f"no bandwidth peak for level {level.value}") from None


def load_peaks(path=None) -> dict[str, MachinePeaks]:
    """Load the architecture peaks table (shipped examples by default)."""
    if path is None:
        text = resources.files("counterscope.data").joinpath("peaks.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    doc = json.loads(text)
    table = {}
    for rec in doc.get("architectures", []):
        peaks = MachinePeaks(
            architecture=rec["architecture"],
            peak_gflops=float(rec["peak_gflops"]),
            bandwidth_gbps=rec["bandwidth_gbps"],
        )
        table[peaks.architecture] = peaks
    if not table:
        raise ConfigError("peaks table is empty")
    return table


def attainable_performance(peaks: MachinePeaks, level, ai: float) -> float:
    """Roofline ceiling at a given arithmetic intensity:
    min(peak compute, ai * peak bandwidth at the level)."""
    if ai < 0 or not math.isfinite(ai):
        raise DataError(f"arithmetic intensity must be finite and >= 0, got {ai!r}")
    try:
        level = MemLevel(level)
    except ValueError:
        raise ConfigError(f"unknown memory level {level!r}") from None
    return min(peaks.peak_gflops, ai * peaks.bandwidth(level))


@dataclass(frozen=True)
class RooflinePoint:
    """One kernel at one memory level on the roofline plane."""

    level: MemLevel
    ai: float
    gflops: float

    def __post_init__(self):
        object.__setattr__(self, "level", MemLevel(self.level))
        for name, value in (("ai", self.ai), ("gflops", self.gflops)):
            if not math.isfinite(value) or value < 0:
                raise InputValidationError(f"roofline {name} must be finite and >= 0")


def roofline_points(physical: CounterVector) -> list[RooflinePoint]:
    """Kernel points (AI, GFLOP/s) per memory level from physical counters."""
    pairs = {
        MemLevel.L1: (Metric.L1_AI, Metric.L1_GFLOPS),
        MemLevel.L2: (Metric.L2_AI, Metric.L2_GFLOPS),
        MemLevel.HBM: (Metric.HBM_AI, Metric.HBM_GFLOPS),
    }
    points = []
    for level, (ai_m, gf_m) in pairs.items():
        if ai_m in physical and gf_m in physical:
            points.append(RooflinePoint(level, physical[ai_m], physical[gf_m]))
    return points
