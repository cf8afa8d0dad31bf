"""Relative-error evaluation of any backend against any labeled test set.

Produces per-metric accuracy tables at fixed relative-error thresholds
(strictly below, matching "falling below"), histograms of ground-truth and
error distributions, and explicit accounting of near-zero exclusions and
extraction failures. Conservation holds per metric: counted + excluded +
failed = total.

Near-zero ground truths (below one quantum of the 3-decimal wire format by
default) are excluded from the error statistics rather than silently
producing unstable ratios; their count is always disclosed so either
convention can be compared.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import TrainingSample
from .errors import (
    BackendUnavailableError,
    ConfigError,
    CounterscopeError,
    DataError,
    EvalError,
    ExtractionError,
)
from .metrics import Metric, NormRanges
from .predict import Backend, PredictRequest, extract_json, predict
from .prompts import parse_user_prompt

DEFAULT_THRESHOLDS = (0.02, 0.04, 0.06, 0.08, 0.10)

#: One quantum of the 3-decimal wire format; ground truths below it are
#: excluded from relative-error statistics.
DEFAULT_EPSILON = 0.001


@dataclass(frozen=True)
class PredictionPair:
    metric: Metric
    predicted: float
    ground_truth: float
    provenance: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.predicted) and math.isfinite(self.ground_truth)):
            raise DataError(f"{self.metric}: non-finite prediction pair")
        if self.ground_truth < 0:
            raise DataError(f"{self.metric}: negative ground truth {self.ground_truth}")


def relative_error(predicted: float, ground_truth: float, epsilon: float = DEFAULT_EPSILON):
    """|pred - gt| / gt, or None (excluded) when gt is below epsilon.

    The ratio is numerically unstable near zero ground truth; exclusion with
    explicit counting keeps the table interpretable.
    """
    if ground_truth < 0:
        raise DataError(f"negative ground truth {ground_truth}")
    if ground_truth < epsilon:
        return None
    return abs(predicted - ground_truth) / ground_truth


@dataclass
class MetricRow:
    metric: Metric
    shares: dict[float, float | None]  # threshold -> share of counted pairs, or None
    counted: int = 0
    excluded: int = 0
    failed: int = 0

    @property
    def total(self) -> int:
        return self.counted + self.excluded + self.failed


def threshold_table(
    pairs,
    thresholds=DEFAULT_THRESHOLDS,
    epsilon: float = DEFAULT_EPSILON,
) -> dict[Metric, MetricRow]:
    """Per-metric share of pairs with relative error strictly below each
    threshold. Metrics with no countable pairs get None cells, never a
    division by zero."""
    thresholds = tuple(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ConfigError(f"thresholds must be strictly increasing, got {thresholds}")
    errors: dict[Metric, list[float]] = {}
    excluded: dict[Metric, int] = {}
    for pair in pairs:
        err = relative_error(pair.predicted, pair.ground_truth, epsilon)
        if err is None:
            excluded[pair.metric] = excluded.get(pair.metric, 0) + 1
        else:
            errors.setdefault(pair.metric, []).append(err)
    rows = {}
    for metric in sorted(set(errors) | set(excluded), key=lambda m: m.value):
        errs = np.asarray(errors.get(metric, []), dtype=float)
        shares: dict[float, float | None] = {}
        for t in thresholds:
            shares[t] = float(np.mean(errs < t)) if errs.size else None
        rows[metric] = MetricRow(
            metric, shares, counted=int(errs.size), excluded=excluded.get(metric, 0)
        )
    return rows


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]

    def total(self) -> int:
        return sum(self.counts)


def histogram(values, bins=20, value_range=None) -> Histogram:
    """Counts per bin: lower edge inclusive, upper exclusive, last inclusive.

    ``bins`` may be a count or explicit edges. Non-finite values are data
    errors reported with their index.
    """
    values = list(values)
    if not values:
        raise DataError("cannot histogram an empty value list")
    for i, v in enumerate(values):
        if not math.isfinite(v):
            raise DataError(f"non-finite value at index {i}: {v!r}")
    if not isinstance(bins, int):
        edges = [float(e) for e in bins]
        if any(not math.isfinite(e) for e in edges):
            raise DataError("histogram edges must be finite")
        counts, out_edges = np.histogram(values, bins=edges)
    else:
        counts, out_edges = np.histogram(values, bins=bins, range=value_range)
    return Histogram(tuple(float(e) for e in out_edges), tuple(int(c) for c in counts))


@dataclass
class EvalReport:
    backend_id: str
    thresholds: tuple[float, ...]
    epsilon: float
    rows: dict[Metric, MetricRow]
    gt_histograms: dict[Metric, Histogram] = field(default_factory=dict)
    error_histograms: dict[Metric, Histogram] = field(default_factory=dict)
    total_samples: int = 0
    failed_samples: int = 0
    failures_by_kind: dict[str, int] = field(default_factory=dict)
    aggregate_within_10: float | None = None

    def check_invariants(self):
        for row in self.rows.values():
            values = [s for s in row.shares.values() if s is not None]
            if any(b < a - 1e-12 for a, b in zip(values, values[1:])):
                raise EvalError(f"non-monotone threshold row for {row.metric}")
            if row.counted + row.excluded + row.failed != self.total_samples:
                raise EvalError(
                    f"conservation violated for {row.metric}: "
                    f"{row.counted}+{row.excluded}+{row.failed} != {self.total_samples}"
                )

    def to_json_dict(self) -> dict:
        return {
            "backend": self.backend_id,
            "thresholds": list(self.thresholds),
            "epsilon": self.epsilon,
            "total_samples": self.total_samples,
            "failed_samples": self.failed_samples,
            "failures_by_kind": dict(self.failures_by_kind),
            "aggregate_within_10_percent": self.aggregate_within_10,
            "metrics": {
                row.metric.value: {
                    "shares": {f"{t:g}": row.shares[t] for t in self.thresholds},
                    "counted": row.counted,
                    "excluded_near_zero": row.excluded,
                    "failed": row.failed,
                }
                for row in self.rows.values()
            },
            "ground_truth_histograms": {
                m.value: {"edges": list(h.edges), "counts": list(h.counts)}
                for m, h in self.gt_histograms.items()
            },
            "relative_error_histograms": {
                m.value: {"edges": list(h.edges), "counts": list(h.counts)}
                for m, h in self.error_histograms.items()
            },
        }

    def to_markdown(self) -> str:
        header = ["Metric"] + [f"{t:.0%}" for t in self.thresholds] + ["Excluded", "Failed"]
        lines = [
            f"# Evaluation report: backend `{self.backend_id}`",
            "",
            f"Samples: {self.total_samples}; prediction failures: {self.failed_samples}; "
            f"near-zero exclusion epsilon: {self.epsilon}.",
            "Cells show the percentage of predictions with relative error strictly "
            "below each threshold.",
            "",
            "| " + " | ".join(header) + " |",
            "|" + "---|" * len(header),
        ]
        for metric in Metric:
            row = self.rows.get(metric)
            if row is None:
                continue
            cells = [
                f"{row.shares[t] * 100:.1f}" if row.shares[t] is not None else "n/a"
                for t in self.thresholds
            ]
            lines.append(
                "| " + " | ".join([metric.value] + cells + [str(row.excluded), str(row.failed)]) + " |"
            )
        if self.aggregate_within_10 is not None:
            lines += ["", f"Overall share within 10% relative error: "
                          f"{self.aggregate_within_10 * 100:.1f}%."]
        return "\n".join(lines) + "\n"

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps(self.to_json_dict(), indent=2), encoding="utf-8"
        )
        (out_dir / "report.md").write_text(self.to_markdown(), encoding="utf-8")
        for name, table in (
            ("ground_truth", self.gt_histograms),
            ("relative_error", self.error_histograms),
        ):
            for metric, hist in table.items():
                path = out_dir / f"hist_{name}_{metric.value}.csv"
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["bin_lower", "bin_upper", "count"])
                    for lo, hi, count in zip(hist.edges, hist.edges[1:], hist.counts):
                        writer.writerow([lo, hi, count])
        return out_dir


def evaluate(
    backend: Backend,
    samples: list[TrainingSample],
    ranges: NormRanges,
    thresholds=DEFAULT_THRESHOLDS,
    epsilon: float = DEFAULT_EPSILON,
    max_workers: int = 8,
    histogram_bins: int = 20,
) -> EvalReport:
    """Predict every sample, pair against its ground-truth block, and build
    the full report. Per-sample failures are recorded and evaluation
    continues; only a totally unavailable backend is a hard failure."""
    samples = list(samples)
    if not samples:
        raise EvalError("no samples to evaluate")
    if not backend.healthy():
        raise BackendUnavailableError(backend.id, "backend reports unhealthy")

    def run_one(indexed):
        i, sample = indexed
        gt_norm, _ = extract_json(sample.assistant)
        source, arch, flags = parse_user_prompt(sample.user)
        req = PredictRequest(source=source, architecture=arch, compiler_flags=flags, request_id=i)
        try:
            resp = predict(backend, req, ranges)
        except ExtractionError as exc:
            return gt_norm, None, exc.kind
        except CounterscopeError as exc:
            return gt_norm, None, type(exc).__name__
        return gt_norm, resp.normalized, None

    # bounded fan-out; accumulation below is a deterministic, order-based pass
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        outcomes = list(pool.map(run_one, enumerate(samples)))

    pairs: list[PredictionPair] = []
    failed_per_metric: dict[Metric, int] = {m: 0 for m in Metric}
    gt_values: dict[Metric, list[float]] = {m: [] for m in Metric}
    failures_by_kind: dict[str, int] = {}
    failed_samples = 0
    for i, (gt_norm, pred_norm, failure_kind) in enumerate(outcomes):
        for metric in gt_norm:
            gt_values[metric].append(gt_norm[metric])
        if failure_kind is not None:
            failed_samples += 1
            failures_by_kind[failure_kind] = failures_by_kind.get(failure_kind, 0) + 1
            for metric in gt_norm:
                failed_per_metric[metric] += 1
            continue
        for metric in gt_norm:
            if metric in pred_norm:
                pairs.append(
                    PredictionPair(metric, pred_norm[metric], gt_norm[metric], provenance=str(i))
                )

    rows = threshold_table(pairs, thresholds, epsilon)
    for metric in Metric:
        if gt_values[metric] and metric not in rows:
            rows[metric] = MetricRow(metric, {t: None for t in thresholds})
        if metric in rows:
            rows[metric].failed = failed_per_metric[metric]

    all_errors = [
        err
        for pair in pairs
        if (err := relative_error(pair.predicted, pair.ground_truth, epsilon)) is not None
    ]
    aggregate = float(np.mean(np.asarray(all_errors) < 0.10)) if all_errors else None

    report = EvalReport(
        backend_id=backend.id,
        thresholds=tuple(thresholds),
        epsilon=epsilon,
        rows=rows,
        total_samples=len(samples),
        failed_samples=failed_samples,
        failures_by_kind=failures_by_kind,
        aggregate_within_10=aggregate,
    )
    for metric in Metric:
        if gt_values[metric]:
            report.gt_histograms[metric] = histogram(
                gt_values[metric], bins=histogram_bins, value_range=(0.0, 1.0)
            )
        metric_errors = [
            err
            for pair in pairs
            if pair.metric == metric
            and (err := relative_error(pair.predicted, pair.ground_truth, epsilon)) is not None
        ]
        if metric_errors:
            report.error_histograms[metric] = histogram(metric_errors, bins=histogram_bins)
    report.check_invariants()
    return report
