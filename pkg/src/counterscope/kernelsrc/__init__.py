"""Kernel source tooling: synthetic generation, restricted parsing,
rename augmentation, fingerprinting, and the analytic counter oracle."""

from .generator import GeneratedKernel, KernelGenSpec, KernelMetadata, generate
from .oracle import HitRateModel, oracle_counters, recover_metadata
from .parser import (
    KernelAnalysis,
    Module,
    OpCounts,
    analyze_kernel,
    fingerprint_source,
    parse_module,
    validate_restricted,
)
from .rename import RenameMap, build_rename_map, rename_source, rename_variables

__all__ = [
    "GeneratedKernel",
    "KernelGenSpec",
    "KernelMetadata",
    "generate",
    "HitRateModel",
    "oracle_counters",
    "recover_metadata",
    "KernelAnalysis",
    "Module",
    "OpCounts",
    "analyze_kernel",
    "fingerprint_source",
    "parse_module",
    "validate_restricted",
    "RenameMap",
    "build_rename_map",
    "rename_source",
    "rename_variables",
]
