"""Restricted-grammar parsing, instruction counting, and fingerprints."""

import pytest

from counterscope.errors import KernelParseError
from counterscope.kernelsrc import (
    analyze_kernel,
    fingerprint_source,
    parse_module,
    validate_restricted,
)

from conftest import GRID_STRIDE_SOURCE, REDUCTION_SOURCE, SINGLE_FMA_SOURCE


class TestValidateRestricted:
    def test_generated_kernel_counts(self):
        mod = validate_restricted(SINGLE_FMA_SOURCE)
        assert mod.ok
        assert [k.name for k in mod.kernels] == ["generated_kernel"]
        analysis = analyze_kernel(mod.kernels[0])
        assert analysis.counts.loads == 1
        assert analysis.counts.stores == 1
        assert analysis.counts.flops == 2  # fused multiply-add: mul + add
        assert analysis.counts.loaded_bytes == 8
        assert analysis.counts.stored_bytes == 8
        assert analysis.dtype == "double"

    def test_empty_text_diagnoses_no_kernel(self):
        mod = validate_restricted("")
        assert not mod.ok
        assert any("no kernel found" in str(d) for d in mod.diagnostics)

    def test_grid_stride_loop_per_iteration_counts(self):
        mod = validate_restricted(GRID_STRIDE_SOURCE)
        assert mod.ok
        analysis = analyze_kernel(mod.kernels[0])
        assert analysis.counts.flops == 0  # thread-id/stride math is integral
        assert len(analysis.loops) == 1
        body = analysis.loops[0].counts
        assert body.loads == 2
        assert body.stores == 1
        assert body.flops == 1
        assert body.loaded_bytes == 16
        assert body.stored_bytes == 8

    def test_reduction_kernel_accepted(self):
        mod = validate_restricted(REDUCTION_SOURCE)
        assert mod.ok
        assert mod.kernels[0].name == "reduce_kernel"

    def test_diagnostics_carry_location(self):
        mod = validate_restricted("__global__ void broken(double *a) { auto x = ; }")
        assert not mod.ok
        assert all(d.line >= 1 for d in mod.diagnostics)

    def test_unlexable_text_is_diagnosed_not_raised(self):
        mod = validate_restricted("__global__ void k() { auto s = @; }")
        assert not mod.ok


class TestParseModule:
    def test_strict_raises_with_location(self):
        with pytest.raises(KernelParseError) as exc:
            parse_module("__global__ void k(double *a) { auto = 1; }")
        assert exc.value.line >= 1

    def test_no_kernel_raises(self):
        with pytest.raises(KernelParseError):
            parse_module("int main() { return 0; }")

    def test_launch_statement_parses(self):
        mod = parse_module(SINGLE_FMA_SOURCE)
        assert len(mod.functions) == 1
        assert mod.functions[0].name == "main"

    def test_includes_collected(self):
        mod = parse_module(SINGLE_FMA_SOURCE)
        assert any("hip/hip_runtime.h" in inc for inc in mod.includes)


class TestFingerprint:
    def test_stable(self):
        assert fingerprint_source(SINGLE_FMA_SOURCE) == fingerprint_source(SINGLE_FMA_SOURCE)

    def test_identifier_independent(self):
        renamed = (
            SINGLE_FMA_SOURCE.replace("var_0", "alpha")
            .replace("var_1", "beta")
            .replace("thread_id", "tid")
        )
        assert fingerprint_source(renamed) == fingerprint_source(SINGLE_FMA_SOURCE)

    def test_structure_sensitive(self):
        changed = SINGLE_FMA_SOURCE.replace("var_0 * var_0 + var_0", "var_0 + var_0")
        assert fingerprint_source(changed) != fingerprint_source(SINGLE_FMA_SOURCE)

    def test_host_only_changes_do_not_matter(self):
        changed = SINGLE_FMA_SOURCE.replace("kernel launch failed", "launch went sideways")
        assert fingerprint_source(changed) == fingerprint_source(SINGLE_FMA_SOURCE)

    def test_unlexable_source_still_fingerprints(self):
        assert fingerprint_source('auto x = "').startswith("fp-")

    def test_comments_ignored(self):
        with_comment = SINGLE_FMA_SOURCE.replace(
            "__global__", "// a note\n__global__"
        )
        assert fingerprint_source(with_comment) == fingerprint_source(SINGLE_FMA_SOURCE)
