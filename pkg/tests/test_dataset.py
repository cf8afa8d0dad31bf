"""Chat-format rendering, split assignment, dataset IO, and export."""

import json
import re

import pytest

from counterscope.dataset import (
    EXPORT_TEMPLATES,
    SplitManifest,
    TrainingSample,
    assign_splits,
    dataset_card,
    export_dataset,
    read_dataset,
    render_sample,
    write_dataset,
)
from counterscope.errors import ConfigError, DataError
from counterscope.ingest import BuildConfig, LabeledSample
from counterscope.metrics import CounterVector, Metric, denormalize, parse_counter_block
from counterscope.predict import extract_json
from counterscope.prompts import (
    PREDICT_SYSTEM_PROMPT,
    parse_user_prompt,
    render_user_prompt,
)

from conftest import GOLDEN_ARCH, GOLDEN_BLOCK, GOLDEN_FLAGS, SINGLE_FMA_SOURCE


def _labeled(fp="fp-x", origin="oracle", arch="gfx90a", flags=("-O3",), counters=None):
    return LabeledSample(
        source=SINGLE_FMA_SOURCE,
        config=BuildConfig(arch, tuple(flags)),
        counters=counters
        or CounterVector({m: 1.0 + i for i, m in enumerate(Metric)}),
        origin=origin,
        fingerprint=fp,
    )


class TestRenderSample:
    def test_structure(self, ranges):
        sample = render_sample(_labeled(), ranges)
        assert sample.system == PREDICT_SYSTEM_PROMPT
        assert sample.user.startswith("For the GPU architecture gfx90a")
        assert SINGLE_FMA_SOURCE in sample.user
        assert sample.assistant.count("```json") == 1
        norm, config = extract_json(sample.assistant)
        assert norm.is_complete()
        assert config["architecture"] == "gfx90a"
        assert config["compiler_flags"] == "-O3"

    def test_config_tags_match_user_turn(self, ranges):
        sample = render_sample(_labeled(arch="gfx942", flags=("-O2", "-g")), ranges)
        source, arch, flags = parse_user_prompt(sample.user)
        _, config = extract_json(sample.assistant)
        assert arch == config["architecture"] == "gfx942"
        assert flags == config["compiler_flags"] == "-O2 -g"
        assert source == SINGLE_FMA_SOURCE

    def test_all_zero_counters(self, ranges):
        sample = render_sample(
            _labeled(counters=CounterVector({m: 0.0 for m in Metric})), ranges
        )
        values = re.findall(r'"(\d+\.\d{3})"', sample.assistant)
        assert values == ["0.000"] * 12

    def test_ceiling_counters(self, ranges):
        ceilings = CounterVector({m: ranges.ceiling(m) for m in Metric})
        sample = render_sample(_labeled(counters=ceilings), ranges)
        values = re.findall(r'"(\d+\.\d{3})"', sample.assistant)
        assert values == ["1.000"] * 12

    def test_golden_block_reproduced(self, ranges):
        norm, _ = parse_counter_block(GOLDEN_BLOCK)
        physical = denormalize(norm, ranges)
        sample = render_sample(
            _labeled(arch=GOLDEN_ARCH, flags=tuple(GOLDEN_FLAGS.split()),
                     counters=physical),
            ranges,
        )
        assert GOLDEN_BLOCK in sample.assistant

    def test_serialization_chain_is_fixed_point(self, ranges):
        first = render_sample(_labeled(), ranges)
        norm, _ = extract_json(first.assistant)
        physical = denormalize(norm, ranges)
        second = render_sample(_labeled(counters=physical), ranges)
        assert second.assistant == first.assistant

    def test_user_prompt_round_trip_with_tricky_source(self):
        source = 'auto s = "For the GPU architecture fake, nested";\n\n\nmore'
        user = render_user_prompt(source, "gfx90a", "-O3")
        assert parse_user_prompt(user) == (source, "gfx90a", "-O3")


class TestAssignSplits:
    def test_exact_partition(self):
        fps = [f"fp-{i}" for i in range(100)]
        manifest = assign_splits(fps, ratios=(0.9, 0.1), test_count=10, seed=7)
        counts = manifest.counts()
        assert counts == {"train": 81, "validation": 9, "test": 10}
        assert set(manifest.assignment) == set(fps)

    def test_variants_share_split(self, ranges):
        samples = [render_sample(_labeled(fp="fp-shared", flags=(f"-O{i}",)), ranges)
                   for i in range(6)]
        manifest = assign_splits(samples + [render_sample(_labeled(fp=f"fp-{i}"), ranges)
                                            for i in range(20)],
                                 test_count=2, seed=1)
        splits = {manifest.split_of("fp-shared")}
        assert len(splits) == 1

    def test_deterministic_in_seed(self):
        fps = [f"fp-{i}" for i in range(50)]
        a = assign_splits(fps, test_count=5, seed=3)
        b = assign_splits(fps, test_count=5, seed=3)
        c = assign_splits(fps, test_count=5, seed=4)
        assert a.assignment == b.assignment
        assert a.assignment != c.assignment

    def test_missing_fingerprint_rejected(self):
        sample = TrainingSample("s", "u", "a", meta={})
        with pytest.raises(DataError):
            assign_splits([sample], test_count=0)

    def test_oversized_test_reservation_rejected(self):
        with pytest.raises(ConfigError):
            assign_splits(["fp-1", "fp-2"], test_count=2)

    def test_ratios_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            SplitManifest(0.8, 0.1, 0, 0, {})


class TestDatasetIO:
    def _mini_dataset(self, ranges, n=9):
        samples = [render_sample(_labeled(fp=f"fp-{i}", flags=(f"-O{i % 3}",)), ranges)
                   for i in range(n)]
        manifest = assign_splits(samples, ratios=(0.9, 0.1), test_count=2, seed=0)
        return samples, manifest

    def test_write_read_round_trip(self, ranges, tmp_path):
        samples, manifest = self._mini_dataset(ranges)
        write_dataset(samples, manifest, tmp_path)
        loaded = read_dataset(tmp_path)
        assert sorted(s.meta["fingerprint"] for s in loaded) == sorted(
            s.meta["fingerprint"] for s in samples
        )
        by_fp = {s.meta["fingerprint"]: s for s in loaded}
        for sample in samples:
            twin = by_fp[sample.meta["fingerprint"]]
            assert twin.to_dict() == sample.to_dict()

    def test_non_ascii_round_trip(self, ranges, tmp_path):
        labeled = _labeled()
        sample = render_sample(labeled, ranges)
        sample.meta["note"] = "identifiant Δρ — ünïcode"
        manifest = assign_splits(
            [sample] + [render_sample(_labeled(fp=f"fp-{i}"), ranges) for i in range(3)],
            test_count=1, seed=0,
        )
        write_dataset([sample], manifest, tmp_path)
        loaded = read_dataset(tmp_path)
        assert loaded[0].meta["note"] == "identifiant Δρ — ünïcode"

    def test_no_fingerprint_crosses_splits(self, ranges, tmp_path):
        samples, manifest = self._mini_dataset(ranges, n=9)
        write_dataset(samples, manifest, tmp_path)
        seen: dict[str, str] = {}
        for split_file in ("train.jsonl", "validation.jsonl", "test.jsonl"):
            for line in (tmp_path / split_file).read_text().splitlines():
                doc = json.loads(line)
                fp = doc["meta"]["fingerprint"]
                assert seen.setdefault(fp, doc["meta"]["split"]) == doc["meta"]["split"]

    def test_card_counts_conserve(self, ranges, tmp_path):
        samples, manifest = self._mini_dataset(ranges)
        write_dataset(samples, manifest, tmp_path)
        card = json.loads((tmp_path / "dataset_card.json").read_text())
        assert card["total_samples"] == len(samples)
        assert sum(card["by_split"].values()) == len(samples)
        assert sum(card["by_origin"].values()) == len(samples)
        for hist in card["metric_histograms"].values():
            assert sum(hist["counts"]) == len(samples)

    def test_manifest_must_cover_samples(self, ranges, tmp_path):
        samples, manifest = self._mini_dataset(ranges)
        stranger = render_sample(_labeled(fp="fp-stranger"), ranges)
        with pytest.raises(DataError):
            write_dataset(samples + [stranger], manifest, tmp_path)


class TestExport:
    def test_plain_template(self, ranges, tmp_path):
        sample = render_sample(_labeled(), ranges)
        out = tmp_path / "plain.jsonl"
        export_dataset([sample], "plain", out)
        doc = json.loads(out.read_text())
        assert sample.user in doc["text"]
        assert sample.assistant in doc["text"]

    def test_llama3_template_framing(self, ranges, tmp_path):
        sample = render_sample(_labeled(), ranges)
        out = tmp_path / "llama.jsonl"
        export_dataset([sample], "llama3", out)
        text = json.loads(out.read_text())["text"]
        assert text.startswith("<|begin_of_text|>")
        assert "<|start_header_id|>system<|end_header_id|>" in text
        assert text.count("<|eot_id|>") == 3
        # samples themselves never carry model-specific tokens
        assert "<|begin_of_text|>" not in sample.assistant

    def test_unknown_template_rejected(self, ranges, tmp_path):
        with pytest.raises(ConfigError):
            export_dataset([], "nonexistent", tmp_path / "x.jsonl")

    def test_templates_registry(self):
        assert set(EXPORT_TEMPLATES) == {"plain", "llama3"}


def test_dataset_card_handles_empty():
    card = dataset_card([])
    assert card["total_samples"] == 0
