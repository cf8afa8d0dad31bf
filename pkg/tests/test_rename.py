"""Rename augmentation: bijection, reserved names, fingerprint invariance."""

import pytest

from counterscope.errors import KernelParseError
from counterscope.kernelsrc import (
    KernelGenSpec,
    build_rename_map,
    fingerprint_source,
    generate,
    rename_source,
    rename_variables,
    validate_restricted,
)
from counterscope.kernelsrc.lang import RESERVED_IDENTIFIERS

from conftest import GRID_STRIDE_SOURCE, SINGLE_FMA_SOURCE


def test_user_identifiers_replaced():
    renamed, rmap = rename_source(SINGLE_FMA_SOURCE, seed=7)
    for name in ("var_0", "var_1", "thread_id", "generated_kernel", "input_0"):
        assert name in rmap.mapping
        assert rmap.mapping[name] not in (name,)
    assert "var_0" not in renamed
    assert "thread_id" not in renamed


def test_reserved_names_untouched():
    renamed, rmap = rename_source(SINGLE_FMA_SOURCE, seed=7)
    for reserved in ("threadIdx", "blockIdx", "blockDim", "hipDeviceSynchronize",
                     "hipSuccess", "thrust", "device_vector", "std", "cout", "main"):
        assert reserved not in rmap.mapping
    assert "threadIdx.x" in renamed
    assert "hipDeviceSynchronize()" in renamed


def test_map_is_bijective_and_avoids_keywords():
    rmap = build_rename_map(GRID_STRIDE_SOURCE, seed=3)
    values = list(rmap.mapping.values())
    assert len(values) == len(set(values))
    assert not (set(values) & RESERVED_IDENTIFIERS)


def test_fingerprint_preserved():
    renamed, _ = rename_source(SINGLE_FMA_SOURCE, seed=7)
    assert fingerprint_source(renamed) == fingerprint_source(SINGLE_FMA_SOURCE)


def test_two_seeds_differ_but_share_fingerprint():
    a, _ = rename_source(SINGLE_FMA_SOURCE, seed=1)
    b, _ = rename_source(SINGLE_FMA_SOURCE, seed=2)
    assert a != b
    assert fingerprint_source(a) == fingerprint_source(b)


def test_renamed_source_still_parses():
    renamed, _ = rename_source(GRID_STRIDE_SOURCE, seed=13)
    assert validate_restricted(renamed).ok


def test_generated_kernel_round_trip():
    kernel = generate(KernelGenSpec(num_loads=3, num_compute=4, num_stores=2, seed=21))
    variant = rename_variables(kernel, seed=5)
    assert variant.fingerprint == kernel.fingerprint
    assert variant.metadata == kernel.metadata
    assert variant.source != kernel.source


def test_rename_is_deterministic_in_seed():
    a, _ = rename_source(SINGLE_FMA_SOURCE, seed=42)
    b, _ = rename_source(SINGLE_FMA_SOURCE, seed=42)
    assert a == b


def test_unparseable_source_raises_with_location():
    with pytest.raises(KernelParseError):
        rename_source("__global__ void k(double *a) { auto = ; }", seed=0)


def test_whitespace_and_comments_preserved():
    source = SINGLE_FMA_SOURCE.replace(
        "  auto var_0", "  // load the element\n  auto var_0"
    )
    renamed, _ = rename_source(source, seed=9)
    assert "// load the element" in renamed
    assert renamed.count("\n") == source.count("\n")
