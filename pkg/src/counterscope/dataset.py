"""Rendering labeled samples into chat-format training records and
producing leak-free train/validation/test splits.

Samples are stored as structured role/content records; model-specific chat
delimiters are stamped only at export time through a pluggable template, so
one dataset can feed any backend. Splits are decided per base fingerprint,
never per sample, so rename- and flag-expanded variants of one kernel always
land in the same split.
"""

from __future__ import annotations

import json
import os
import random
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ingest import LabeledSample
from .metrics import Metric, NormRanges, normalize
from .predict import extract_json
from .prompts import PREDICT_SYSTEM_PROMPT, render_assistant_turn, render_user_prompt

SPLITS = ("train", "validation", "test")
_SPLIT_FILES = {"train": "train.jsonl", "validation": "validation.jsonl", "test": "test.jsonl"}


@dataclass(frozen=True)
class TrainingSample:
    """One chat-format record: system/user/assistant plus bookkeeping."""

    system: str
    user: str
    assistant: str
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "user": self.user,
            "assistant": self.assistant,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingSample":
        return cls(doc["system"], doc["user"], doc["assistant"], dict(doc.get("meta", {})))


def render_sample(sample: LabeledSample, ranges: NormRanges) -> TrainingSample:
    """Render one labeled sample into the chat format.

    The assistant turn carries exactly one fenced JSON block with the
    3-decimal normalized counters; the configuration tags inside the block
    equal the user-turn values by construction.
    """
    norm = normalize(sample.counters, ranges)
    flags = sample.config.flags_string
    arch = sample.config.architecture
    return TrainingSample(
        system=PREDICT_SYSTEM_PROMPT,
        user=render_user_prompt(sample.source, arch, flags),
        assistant=render_assistant_turn(norm, arch, flags),
        meta={
            "fingerprint": sample.fingerprint,
            "architecture": arch,
            "compiler_flags": flags,
            "origin": sample.origin,
        },
    )


@dataclass(frozen=True)
class SplitManifest:
    """Deterministic fingerprint -> split assignment."""

    train_ratio: float
    val_ratio: float
    test_count: int
    seed: int
    assignment: dict[str, str]

    def __post_init__(self):
        if abs(self.train_ratio + self.val_ratio - 1.0) > 1e-9:
            raise ConfigError("train and validation ratios must sum to 1")
        bad = {s for s in self.assignment.values()} - set(SPLITS)
        if bad:
            raise ConfigError(f"unknown split names {bad}")

    def split_of(self, fingerprint: str) -> str:
        try:
            return self.assignment[fingerprint]
        except KeyError:
            raise DataError(f"fingerprint {fingerprint!r} not covered by the manifest") from None

    def counts(self) -> dict[str, int]:
        out = {s: 0 for s in SPLITS}
        for split in self.assignment.values():
            out[split] += 1
        return out

    def to_dict(self) -> dict:
        return {
            "train_ratio": self.train_ratio,
            "val_ratio": self.val_ratio,
            "test_count": self.test_count,
            "seed": self.seed,
            "assignment": dict(self.assignment),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SplitManifest":
        return cls(
            doc["train_ratio"], doc["val_ratio"], doc["test_count"], doc["seed"],
            dict(doc["assignment"]),
        )


def assign_splits(
    samples,
    ratios: tuple[float, float] = (0.9, 0.1),
    test_count: int = 4000,
    seed: int = 0,
) -> SplitManifest:
    """Assign each base fingerprint to exactly one split.

    Test fingerprints are drawn first (exact count), the remainder is split
    train/validation by the ratios with round-to-nearest. Deterministic in
    the seed; variants sharing a fingerprint trivially share a split.
    """
    fingerprints: list[str] = []
    seen = set()
    for sample in samples:
        fp = _fingerprint_of(sample)
        if not fp:
            raise DataError("sample carries no base fingerprint; cannot assign splits")
        if fp not in seen:
            seen.add(fp)
            fingerprints.append(fp)
    if test_count >= len(fingerprints):
        raise ConfigError(
            f"test reservation ({test_count}) must be smaller than the "
            f"fingerprint pool ({len(fingerprints)})"
        )
    order = list(fingerprints)
    random.Random(seed).shuffle(order)
    test = order[:test_count]
    rest = order[test_count:]
    n_train = round(ratios[0] * len(rest))
    assignment = {fp: "test" for fp in test}
    assignment.update({fp: "train" for fp in rest[:n_train]})
    assignment.update({fp: "validation" for fp in rest[n_train:]})
    return SplitManifest(ratios[0], ratios[1], test_count, seed, assignment)


def _fingerprint_of(sample) -> str:
    if isinstance(sample, TrainingSample):
        return sample.meta.get("fingerprint", "")
    if isinstance(sample, LabeledSample):
        return sample.fingerprint
    if isinstance(sample, str):
        return sample
    return getattr(sample, "fingerprint", "") or ""


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset(samples, manifest: SplitManifest, out_dir) -> dict[str, Path]:
    """Write one JSONL file per split (atomic), the manifest, and a dataset
    card (markdown + JSON). Every sample must be covered by the manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = list(samples)
    by_split: dict[str, list[TrainingSample]] = {s: [] for s in SPLITS}
    for sample in samples:
        split = manifest.split_of(sample.meta.get("fingerprint", ""))
        sample.meta["split"] = split
        by_split[split].append(sample)

    paths = {}
    for split, split_samples in by_split.items():
        path = out_dir / _SPLIT_FILES[split]
        lines = [json.dumps(s.to_dict(), ensure_ascii=False) for s in split_samples]
        _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
        paths[split] = path

    _atomic_write(out_dir / "manifest.json", json.dumps(manifest.to_dict(), indent=2))
    card = dataset_card(samples)
    _atomic_write(out_dir / "dataset_card.json", json.dumps(card, indent=2))
    _atomic_write(out_dir / "dataset_card.md", _card_markdown(card))
    return paths


def read_dataset(in_dir) -> list[TrainingSample]:
    in_dir = Path(in_dir)
    samples = []
    for split in SPLITS:
        path = in_dir / _SPLIT_FILES[split]
        if path.exists():
            samples.extend(read_samples_jsonl(path))
    return samples


def read_samples_jsonl(path) -> list[TrainingSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                samples.append(TrainingSample.from_dict(json.loads(line)))
    return samples


def dataset_card(samples) -> dict:
    """Counts per origin/architecture/flags/split plus per-metric histograms
    of the normalized counter values (10 bins over [0, 1])."""
    card = {
        "total_samples": len(samples),
        "by_split": {},
        "by_origin": {},
        "by_architecture": {},
        "by_compiler_flags": {},
        "unique_fingerprints": len({s.meta.get("fingerprint") for s in samples}),
        "metric_histograms": {},
    }
    per_metric: dict[str, list[float]] = {m.value: [] for m in Metric}
    for sample in samples:
        for key, field_name in (
            ("by_split", "split"), ("by_origin", "origin"),
            ("by_architecture", "architecture"), ("by_compiler_flags", "compiler_flags"),
        ):
            value = sample.meta.get(field_name, "unknown")
            card[key][value] = card[key].get(value, 0) + 1
        try:
            norm, _ = extract_json(sample.assistant)
        except Exception:
            continue
        for metric, value in norm.items():
            per_metric[metric.value].append(value)
    for name, values in per_metric.items():
        if not values:
            continue
        counts, edges = np.histogram(values, bins=10, range=(0.0, 1.0))
        card["metric_histograms"][name] = {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        }
    return card


def _card_markdown(card: dict) -> str:
    lines = ["# Dataset card", "", f"Total samples: {card['total_samples']}",
             f"Unique fingerprints: {card['unique_fingerprints']}", ""]
    for section, title in (
        ("by_split", "Samples per split"),
        ("by_origin", "Samples per origin"),
        ("by_architecture", "Samples per architecture"),
        ("by_compiler_flags", "Samples per compiler-flag string"),
    ):
        lines.append(f"## {title}")
        lines.append("")
        for key in sorted(card[section]):
            lines.append(f"- `{key}`: {card[section][key]}")
        lines.append("")
    lines.append("## Normalized metric distributions (10 bins over [0, 1])")
    lines.append("")
    for metric, hist in card["metric_histograms"].items():
        lines.append(f"- `{metric}`: {hist['counts']}")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Export templates: stamp model-specific chat framing at export time only.
# ---------------------------------------------------------------------------


def _template_plain(sample: TrainingSample) -> str:
    return (
        f"### System:\n{sample.system}\n\n### User:\n{sample.user}\n\n"
        f"### Assistant:\n{sample.assistant}\n"
    )


def _template_llama3(sample: TrainingSample) -> str:
    return (
        "<|begin_of_text|>"
        f"<|start_header_id|>system<|end_header_id|>\n\n{sample.system}<|eot_id|>"
        f"<|start_header_id|>user<|end_header_id|>\n\n{sample.user}<|eot_id|>"
        f"<|start_header_id|>assistant<|end_header_id|>\n\n{sample.assistant}<|eot_id|>"
    )


EXPORT_TEMPLATES = {"plain": _template_plain, "llama3": _template_llama3}


def export_dataset(samples, template: str, path):
    """Write {"text": ...} JSONL with the chosen chat framing applied."""
    try:
        stamp = EXPORT_TEMPLATES[template]
    except KeyError:
        raise ConfigError(
            f"unknown export template {template!r}; available: {sorted(EXPORT_TEMPLATES)}"
        ) from None
    path = Path(path)
    lines = [json.dumps({"text": stamp(s)}, ensure_ascii=False) for s in samples]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
