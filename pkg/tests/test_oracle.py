"""Analytic oracle: streaming-model counters and metadata recovery."""

import pytest

from counterscope.errors import OracleUnavailableError
from counterscope.kernelsrc import (
    HitRateModel,
    KernelGenSpec,
    generate,
    oracle_counters,
    recover_metadata,
    rename_variables,
)
from counterscope.metrics import Metric, normalize

from conftest import GRID_STRIDE_SOURCE, REDUCTION_SOURCE, SINGLE_FMA_SOURCE


@pytest.fixture
def fma_kernel():
    return generate(KernelGenSpec(seed=2))  # 1 load, fma, 1 store, float64


class TestOracleCounters:
    def test_streaming_reference_values(self, fma_kernel, gfx90a_peaks):
        c = oracle_counters(fma_kernel, gfx90a_peaks, efficiency=1.0)
        assert c[Metric.HBM_AI] == pytest.approx(0.125)
        total_bw = c[Metric.FABRIC_READ_BW] + c[Metric.FABRIC_WRITE_BW]
        assert total_bw == pytest.approx(1638.4)
        assert c[Metric.L1_BW] == pytest.approx(1638.4)
        assert c[Metric.L2_BW] == pytest.approx(1638.4)
        assert c[Metric.HBM_GFLOPS] == pytest.approx(0.125 * 1638.4)
        assert c[Metric.L1_HIT_RATE] == 50.0
        assert c[Metric.L2_HIT_RATE] == 37.0

    def test_zero_compute_kernel(self, gfx90a_peaks):
        kernel = generate(KernelGenSpec(num_loads=1, num_compute=0, num_stores=1, seed=4))
        if kernel.metadata.flops_per_thread == 0:
            c = oracle_counters(kernel, gfx90a_peaks)
            assert c[Metric.HBM_GFLOPS] == 0.0
            assert c[Metric.HBM_AI] == 0.0

    def test_efficiency_halves_bandwidth_not_ai(self, fma_kernel, gfx90a_peaks):
        full = oracle_counters(fma_kernel, gfx90a_peaks, efficiency=1.0)
        half = oracle_counters(fma_kernel, gfx90a_peaks, efficiency=0.5)
        assert half[Metric.L1_BW] == pytest.approx(full[Metric.L1_BW] / 2)
        assert half[Metric.HBM_GFLOPS] == pytest.approx(full[Metric.HBM_GFLOPS] / 2)
        assert half[Metric.HBM_AI] == full[Metric.HBM_AI]

    def test_ai_invariant_to_peaks(self, fma_kernel, peaks_table):
        ais = {
            arch: oracle_counters(fma_kernel, peaks)[Metric.HBM_AI]
            for arch, peaks in peaks_table.items()
        }
        assert len(set(ais.values())) == 1

    def test_compute_bound_kernels_capped_at_peak(self, gfx90a_peaks, ranges):
        spec = KernelGenSpec(num_loads=1, num_compute=400, num_stores=1, seed=8)
        kernel = generate(spec)
        c = oracle_counters(kernel, gfx90a_peaks)
        assert c[Metric.HBM_GFLOPS] <= gfx90a_peaks.peak_gflops
        normalize(c, ranges)  # everything still within the configured ranges

    def test_outputs_always_normalizable(self, gfx90a_peaks, ranges):
        for seed in range(25):
            spec = KernelGenSpec(
                num_loads=1 + seed % 4, num_compute=seed % 30,
                num_stores=1 + seed % 3, seed=seed,
            )
            if spec.num_loads + spec.num_compute < spec.num_stores:
                continue
            c = oracle_counters(generate(spec), gfx90a_peaks, efficiency=0.7)
            normalize(c, ranges)

    def test_bad_efficiency_rejected(self, fma_kernel, gfx90a_peaks):
        for eff in (0.0, -1.0, 1.5):
            with pytest.raises(OracleUnavailableError):
                oracle_counters(fma_kernel, gfx90a_peaks, efficiency=eff)

    def test_custom_hit_rate_table(self, fma_kernel, gfx90a_peaks):
        c = oracle_counters(
            fma_kernel, gfx90a_peaks, hit_rates=HitRateModel(l1_percent=80.0, l2_percent=20.0)
        )
        assert c[Metric.L1_HIT_RATE] == 80.0
        assert c[Metric.L2_HIT_RATE] == 20.0


class TestMetadataRecovery:
    def test_recovers_generated_source(self, fma_kernel):
        assert recover_metadata(fma_kernel.source) == fma_kernel.metadata

    def test_recovers_renamed_source(self, fma_kernel):
        renamed = rename_variables(fma_kernel, seed=31)
        assert recover_metadata(renamed.source) == fma_kernel.metadata

    def test_recovers_many_shapes(self):
        for seed in (1, 7, 19):
            spec = KernelGenSpec(
                num_inputs=2, num_outputs=2, dtype="float32",
                num_loads=3, num_compute=5, num_stores=2,
                element_count=300000, block_size=512, seed=seed,
            )
            kernel = generate(spec)
            assert recover_metadata(kernel.source) == kernel.metadata

    def test_oracle_accepts_source_text_directly(self, gfx90a_peaks):
        c = oracle_counters(SINGLE_FMA_SOURCE, gfx90a_peaks)
        assert c[Metric.HBM_AI] == pytest.approx(0.125)

    def test_embedded_header_preferred(self, fma_kernel, gfx90a_peaks):
        with_header = fma_kernel.with_metadata_header()
        direct = oracle_counters(fma_kernel.metadata, gfx90a_peaks)
        via_source = oracle_counters(with_header.source, gfx90a_peaks)
        assert via_source.as_dict() == direct.as_dict()

    def test_refuses_loop_kernels(self):
        with pytest.raises(OracleUnavailableError):
            recover_metadata(GRID_STRIDE_SOURCE)

    def test_refuses_reduction_kernel(self):
        # atomics / guarded control flow carry data-dependent traffic
        with pytest.raises(OracleUnavailableError):
            recover_metadata(REDUCTION_SOURCE)

    def test_refuses_arbitrary_text(self):
        with pytest.raises(OracleUnavailableError):
            recover_metadata("int main() { return 0; }")
