"""Analytic counter oracle for generator-produced kernels.

A streaming-kernel model, not a cache simulator: it exists to give the
pipeline exact, self-consistent ground truth at desk scale. Every thread
performs the per-thread loads, stores, and FLOPs recorded in the kernel
metadata; modeled kernel time is the roofline closure

    time = max(bytes / (efficiency * peak HBM bandwidth), flops / peak compute)

so throughput can never exceed the compute peak even for high-intensity
specs. Bandwidth observed at L1/L2/HBM is identical (pure streaming), fabric
read/write split follows the load/store byte counters, and cache hit rates
come from a small configurable table (defaults model the read-modify-write
streaming shape: L1 50 %, L2 37 %).

The oracle refuses code it cannot account for exactly: it needs generator
metadata, either attached, embedded as a comment header, or recovered by
re-parsing a strictly conforming source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import KernelParseError, OracleUnavailableError
from ..metrics import CounterVector, MachinePeaks, MemLevel, Metric
from .generator import GeneratedKernel, KernelMetadata, parse_metadata_header
from .parser import (
    Call,
    Decl,
    ExprStmt,
    Index,
    Launch,
    Member,
    Name,
    analyze_kernel,
    parse_module,
)

GIGA = 1e9  # decimal giga everywhere: GB/s and GFLOP/s


@dataclass(frozen=True)
class HitRateModel:
    """Streaming-model cache hit rates (percent)."""

    l1_percent: float = 50.0
    l2_percent: float = 37.0


DEFAULT_HIT_RATES = HitRateModel()


def oracle_counters(
    kernel,
    peaks: MachinePeaks,
    efficiency: float = 1.0,
    hit_rates: HitRateModel = DEFAULT_HIT_RATES,
) -> CounterVector:
    """Exact analytic counters for a generated kernel under the streaming model.

    ``kernel`` may be a ``GeneratedKernel``, a ``KernelMetadata``, or a source
    string (embedded metadata header or strict re-parse). Raises
    ``OracleUnavailableError`` for anything whose traffic cannot be derived
    exactly.
    """
    if not (0.0 < efficiency <= 1.0):
        raise OracleUnavailableError(f"efficiency must be in (0, 1], got {efficiency}")
    meta = _metadata_of(kernel)

    threads = meta.total_threads
    loaded = threads * meta.bytes_loaded_per_thread
    stored = threads * meta.bytes_stored_per_thread
    total_bytes = loaded + stored
    flops = threads * meta.flops_per_thread
    if total_bytes <= 0:
        raise OracleUnavailableError("kernel moves no bytes; streaming model undefined")

    ai = flops / total_bytes
    mem_time = total_bytes / (efficiency * peaks.bandwidth(MemLevel.HBM) * GIGA)
    compute_time = flops / (peaks.peak_gflops * GIGA)
    time = max(mem_time, compute_time)

    gflops = flops / time / GIGA
    total_bw = total_bytes / time / GIGA
    return CounterVector(
        {
            Metric.L1_AI: ai,
            Metric.L2_AI: ai,
            Metric.HBM_AI: ai,
            Metric.L1_GFLOPS: gflops,
            Metric.L2_GFLOPS: gflops,
            Metric.HBM_GFLOPS: gflops,
            Metric.L1_BW: total_bw,
            Metric.L2_BW: total_bw,
            Metric.FABRIC_READ_BW: loaded / time / GIGA,
            Metric.FABRIC_WRITE_BW: stored / time / GIGA,
            Metric.L1_HIT_RATE: hit_rates.l1_percent,
            Metric.L2_HIT_RATE: hit_rates.l2_percent,
        }
    )


def _metadata_of(kernel) -> KernelMetadata:
    if isinstance(kernel, KernelMetadata):
        return kernel
    if isinstance(kernel, GeneratedKernel):
        return kernel.metadata
    if isinstance(kernel, str):
        meta = parse_metadata_header(kernel)
        if meta is not None:
            return meta
        return recover_metadata(kernel)
    raise OracleUnavailableError(f"cannot derive metadata from {type(kernel).__name__}")


def recover_metadata(source: str) -> KernelMetadata:
    """Reconstruct exact metadata by re-parsing a generator-shaped source.

    Works on renamed variants too, because everything is resolved through
    the launch statement rather than through variable names. Refuses any
    source that is not a strict single-kernel, straight-line streaming
    program; guessing would corrupt ground truth.
    """
    try:
        mod = parse_module(source)
    except KernelParseError as exc:
        raise OracleUnavailableError(f"source does not parse: {exc}") from exc
    if len(mod.kernels) != 1:
        raise OracleUnavailableError(f"expected exactly one kernel, found {len(mod.kernels)}")

    analysis = analyze_kernel(mod.kernels[0])
    if analysis.loops:
        raise OracleUnavailableError("loop kernels carry data-dependent traffic; refusing")
    if _has_branches(mod.kernels[0].body):
        raise OracleUnavailableError("divergent kernels carry data-dependent traffic; refusing")
    if analysis.dtype is None:
        raise OracleUnavailableError("kernel has no float-pointer parameter")
    if analysis.counts.loads == 0 and analysis.counts.stores == 0:
        raise OracleUnavailableError("kernel performs no memory operations")

    main = next((f for f in mod.functions if f.name == "main"), None)
    if main is None:
        raise OracleUnavailableError("no host driver found")

    decls = {s.name: s for s in main.body if isinstance(s, Decl)}
    launch = _find_launch(main.body)
    if launch is None:
        raise OracleUnavailableError("no kernel launch statement found")
    if len(launch.config) < 2:
        raise OracleUnavailableError("launch configuration must carry grid and block sizes")

    block_size = _resolve_int(launch.config[1], decls)
    if block_size is None or block_size <= 0:
        raise OracleUnavailableError("cannot resolve block size from launch statement")

    element_count = None
    for arg in launch.args:
        root = _root_name(arg)
        decl = decls.get(root) if root else None
        if decl is not None and decl.init_style in ("paren", "brace") and decl.init:
            element_count = _resolve_int(decl.init[0], decls)
            if element_count:
                break
    if element_count is None or element_count <= 0:
        raise OracleUnavailableError("cannot resolve buffer element count from host driver")

    num_blocks = math.ceil(element_count / block_size)
    dtype = {"double": "float64", "float": "float32"}[analysis.dtype]
    return KernelMetadata(
        flops_per_thread=analysis.counts.flops,
        bytes_loaded_per_thread=analysis.counts.loaded_bytes,
        bytes_stored_per_thread=analysis.counts.stored_bytes,
        total_threads=num_blocks * block_size,
        dtype=dtype,
        num_blocks=num_blocks,
        block_size=block_size,
        element_count=element_count,
    )


def _has_branches(stmts) -> bool:
    from .parser import For, If

    for stmt in stmts:
        if isinstance(stmt, (If, For)):
            return True
        if isinstance(stmt, tuple) and _has_branches(stmt):
            return True
    return False


def _find_launch(stmts):
    for stmt in stmts:
        if isinstance(stmt, ExprStmt) and isinstance(stmt.expr, Launch):
            return stmt.expr
        if isinstance(stmt, Decl) and isinstance(stmt.init, Launch):
            return stmt.init
    return None


def _root_name(expr):
    # walk chains like input_0.data().get() back to the buffer name
    while True:
        if isinstance(expr, Member):
            expr = expr.base
        elif isinstance(expr, Call):
            expr = expr.callee
        elif isinstance(expr, Index):
            expr = expr.base
        else:
            break
    return expr.last if isinstance(expr, Name) else None


def _resolve_int(expr, decls, depth: int = 0):
    """Evaluate a literal or a declared constant to an int, if possible."""
    if depth > 8:
        return None
    if hasattr(expr, "int_value"):
        try:
            value = expr.int_value()
        except ValueError:
            return None
        return value
    if isinstance(expr, Name):
        decl = decls.get(expr.last)
        if decl is None:
            return None
        if decl.init_style == "assign":
            return _resolve_int(decl.init, decls, depth + 1)
        if decl.init_style in ("paren", "brace") and decl.init:
            return _resolve_int(decl.init[0], decls, depth + 1)
    return None
