"""Deterministic synthetic GPU-kernel generator.

Given a numeric spec (argument counts, problem size, dtype, instruction
counts, seed) this emits a self-contained single-file HIP program: includes,
one kernel, and a host driver that allocates device buffers, launches, and
checks the synchronization status. Operand selection for compute statements
is skewed toward recently defined variables (truncated geometric
distribution), which keeps every statement on a data-dependency chain.

Alongside the source we emit exact analytic metadata (FLOPs and bytes per
thread, thread counts) so the analytic oracle can label these kernels with
self-consistent ground truth without any hardware.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass

from ..errors import GenerationError
from .parser import fingerprint_source

VALID_BLOCK_SIZES = (64, 128, 256, 512, 1024)
DTYPE_C = {"float32": "float", "float64": "double"}
DTYPE_SIZE = {"float32": 4, "float64": 8}

#: op kind -> (FLOPs, template). Weights favor the fused multiply-add shape.
_OP_KINDS = (
    ("fma", 2, "{a} * {b} + {c}"),
    ("mul", 1, "{a} * {b}"),
    ("add", 1, "{a} + {b}"),
    ("sub", 1, "{a} - {b}"),
    ("div", 1, "{a} / {b}"),
)
_OP_WEIGHTS = (0.35, 0.20, 0.20, 0.15, 0.10)

METADATA_COMMENT_PREFIX = "// counterscope-metadata: "


@dataclass(frozen=True)
class KernelGenSpec:
    """Numeric description of one synthetic kernel."""

    num_inputs: int = 1
    num_outputs: int = 1
    element_count: int = 102528
    dtype: str = "float64"
    num_loads: int = 1
    num_stores: int = 1
    num_compute: int = 1
    block_size: int = 256
    seed: int = 0
    recency_p: float = 0.5  # geometric skew parameter for operand sampling

    def validate(self):
        if self.num_inputs < 1 or self.num_outputs < 1:
            raise GenerationError("need at least one input and one output argument")
        if self.num_loads < 1:
            raise GenerationError("num_loads must be >= 1 (compute chains start from loads)")
        if self.num_stores < 1:
            raise GenerationError("num_stores must be >= 1")
        if self.num_compute < 0:
            raise GenerationError("num_compute must be >= 0")
        if self.element_count < 1:
            raise GenerationError("element_count must be >= 1")
        if self.block_size not in VALID_BLOCK_SIZES:
            raise GenerationError(
                f"block_size must be one of {VALID_BLOCK_SIZES}, got {self.block_size}"
            )
        if self.dtype not in DTYPE_C:
            raise GenerationError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if not (0.0 < self.recency_p < 1.0):
            raise GenerationError(f"recency_p must be in (0, 1), got {self.recency_p}")
        if self.num_loads + self.num_compute < self.num_stores:
            raise GenerationError(
                "unsatisfiable spec: stores must each publish a distinct variable, "
                f"but only {self.num_loads + self.num_compute} variables exist for "
                f"{self.num_stores} stores"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelGenSpec":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass(frozen=True)
class KernelMetadata:
    """Analytic ground truth derived from the emitted instruction stream."""

    flops_per_thread: int
    bytes_loaded_per_thread: int
    bytes_stored_per_thread: int
    total_threads: int
    dtype: str
    num_blocks: int
    block_size: int
    element_count: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelMetadata":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


@dataclass(frozen=True)
class GeneratedKernel:
    source: str
    metadata: KernelMetadata
    spec: KernelGenSpec
    fingerprint: str

    def with_metadata_header(self) -> "GeneratedKernel":
        """Copy whose source carries the metadata as a leading comment, so
        the analytic oracle can label it from the source text alone."""
        if self.source.startswith(METADATA_COMMENT_PREFIX):
            return self
        header = METADATA_COMMENT_PREFIX + json.dumps(self.metadata.to_dict()) + "\n"
        return GeneratedKernel(header + self.source, self.metadata, self.spec, self.fingerprint)


def _sample_recent(rng: random.Random, n: int, p: float) -> tuple[int, int]:
    """Sample an index into n candidates, most recent (index n-1) most likely.

    Distance d from the most recent definition has weight (1-p)^d, truncated
    to the candidate window. Returns (index, distance).
    """
    if n == 1:
        return 0, 0
    total = (1.0 - (1.0 - p) ** n) / p
    r = rng.random() * total
    cum = 0.0
    weight = 1.0
    for d in range(n):
        cum += weight
        if r < cum or d == n - 1:
            return n - 1 - d, d
        weight *= 1.0 - p
    return 0, n - 1  # unreachable


def generate(spec: KernelGenSpec) -> GeneratedKernel:
    """Emit one kernel. Pure function of the spec, including its seed."""
    spec.validate()
    rng = random.Random(spec.seed)
    ctype = DTYPE_C[spec.dtype]
    elem_size = DTYPE_SIZE[spec.dtype]

    body: list[str] = ["auto thread_id = threadIdx.x + blockIdx.x * blockDim.x;"]
    deps: list[set[int]] = []  # per variable: direct operand indices
    flops = 0

    for i in range(spec.num_loads):
        src_arg = rng.randrange(spec.num_inputs)
        body.append(f"auto var_{i} = input_{src_arg}[thread_id];")
        deps.append(set())

    for _ in range(spec.num_compute):
        n = len(deps)
        kind, cost, template = rng.choices(_OP_KINDS, weights=_OP_WEIGHTS, k=1)[0]
        arity = 3 if kind == "fma" else 2
        operands = [_sample_recent(rng, n, spec.recency_p)[0] for _ in range(arity)]
        names = {key: f"var_{idx}" for key, idx in zip("abc", operands)}
        body.append(f"auto var_{n} = {template.format(**names)};")
        deps.append(set(operands))
        flops += cost

    candidates = list(range(len(deps)))
    stored: list[int] = []
    for _ in range(spec.num_stores):
        pos, _ = _sample_recent(rng, len(candidates), spec.recency_p)
        stored.append(candidates.pop(pos))

    # Re-link any variable unreachable from the stores into the final store
    # expression so no dead chains survive.
    reachable: set[int] = set()
    frontier = list(stored)
    while frontier:
        v = frontier.pop()
        if v in reachable:
            continue
        reachable.add(v)
        frontier.extend(deps[v])
    dead = sorted(set(range(len(deps))) - reachable)

    for slot, var in enumerate(stored):
        out_arg = slot % spec.num_outputs
        expr = f"var_{var}"
        if slot == len(stored) - 1 and dead:
            expr = " + ".join([expr] + [f"var_{d}" for d in dead])
            flops += len(dead)
        body.append(f"output_{out_arg}[thread_id] = {expr};")

    num_blocks = math.ceil(spec.element_count / spec.block_size)
    metadata = KernelMetadata(
        flops_per_thread=flops,
        bytes_loaded_per_thread=spec.num_loads * elem_size,
        bytes_stored_per_thread=spec.num_stores * elem_size,
        total_threads=num_blocks * spec.block_size,
        dtype=spec.dtype,
        num_blocks=num_blocks,
        block_size=spec.block_size,
        element_count=spec.element_count,
    )

    source = _render_source(spec, ctype, body)
    return GeneratedKernel(source, metadata, spec, fingerprint_source(source))


def _render_source(spec: KernelGenSpec, ctype: str, body: list[str]) -> str:
    params = ", ".join(
        [f"{ctype} *input_{i}" for i in range(spec.num_inputs)]
        + [f"{ctype} *output_{i}" for i in range(spec.num_outputs)]
    )
    buffers = [
        f"  thrust::device_vector<{ctype}> input_{i}({spec.element_count}, 1);"
        for i in range(spec.num_inputs)
    ] + [
        f"  thrust::device_vector<{ctype}> output_{i}({spec.element_count}, 1);"
        for i in range(spec.num_outputs)
    ]
    launch_args = ", ".join(
        [f"input_{i}.data().get()" for i in range(spec.num_inputs)]
        + [f"output_{i}.data().get()" for i in range(spec.num_outputs)]
    )
    lines = [
        "#include <cstdint>",
        "#include <iostream>",
        "",
        "#include <hip/hip_runtime.h>",
        "#include <hip/hip_runtime_api.h>",
        "#include <thrust/device_vector.h>",
        "",
        f"__global__ void generated_kernel({params}) {{",
        *[f"  {stmt}" for stmt in body],
        "}",
        "",
        "int main(int, char **) {",
        *buffers,
        "",
        f"  std::size_t block_size{{{spec.block_size}}};",
        f"  std::size_t input_size{{{spec.element_count}}};",
        "  std::size_t num_blocks{(input_size + block_size - 1) / block_size};",
        "",
        "  generated_kernel<<<num_blocks, block_size>>>(",
        f"      {launch_args});",
        "",
        "  auto status = hipDeviceSynchronize();",
        "  if (status != hipSuccess) {",
        '    std::cout << "kernel launch failed\\n";',
        "  }",
        "}",
        "",
    ]
    return "\n".join(lines)


def parse_metadata_header(source: str) -> KernelMetadata | None:
    """Read the optional embedded metadata comment emitted by
    ``GeneratedKernel.with_metadata_header``."""
    for line in source.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(METADATA_COMMENT_PREFIX.strip()):
            payload = stripped[len(METADATA_COMMENT_PREFIX.strip()):].strip()
            try:
                return KernelMetadata.from_dict(json.loads(payload))
            except (json.JSONDecodeError, TypeError, KeyError):
                return None
        if not stripped.startswith("//"):
            return None
    return None
