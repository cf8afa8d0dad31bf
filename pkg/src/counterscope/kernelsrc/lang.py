"""Reserved vocabulary of the restricted kernel-source language.

The rename pass and the identifier-independent fingerprint must agree on
which identifiers are user-defined, so the reserved set lives here and both
import it.
"""

from __future__ import annotations

CPP_KEYWORDS = frozenset(
    """
    alignas alignof auto bool break case char class const constexpr continue
    default delete do double else enum extern false float for friend goto if
    inline int long mutable namespace new nullptr operator private protected
    public register return short signed sizeof static struct switch template
    this true typedef typename union unsigned using virtual void volatile
    wchar_t while
    """.split()
)

GPU_BUILTINS = frozenset(
    """
    __global__ __device__ __host__ __shared__ __constant__ __restrict__
    __launch_bounds__ __syncthreads __syncwarp
    threadIdx blockIdx blockDim gridDim warpSize
    atomicAdd atomicSub atomicMax atomicMin atomicExch atomicCAS atomicAnd
    atomicOr atomicXor
    """.split()
)

RUNTIME_NAMES = frozenset(
    """
    hipDeviceSynchronize hipSuccess hipError_t hipMalloc hipFree hipMemcpy
    hipMemset hipMemcpyHostToDevice hipMemcpyDeviceToHost
    hipMemcpyDeviceToDevice hipGetErrorString hipGetLastError
    hipLaunchKernelGGL hipStream_t hipStreamCreate hipStreamDestroy
    hipStreamSynchronize hipEventCreate hipEventRecord hipEventElapsedTime
    hipDeviceReset hipSetDevice hipGetDeviceCount
    """.split()
)

LIBRARY_NAMES = frozenset(
    """
    std size_t uint8_t uint16_t uint32_t uint64_t int8_t int16_t int32_t
    int64_t ptrdiff_t cout cerr cin endl vector array string thrust
    device_vector host_vector data get begin end size resize push_back
    main printf fprintf stderr stdout
    min max abs fabs sqrt rsqrt exp exp2 log log2 pow fma fmaf sin cos tan
    floor ceil round fmod
    """.split()
)

#: Identifiers the rename pass must never touch and the fingerprint keeps verbatim.
RESERVED_IDENTIFIERS = CPP_KEYWORDS | GPU_BUILTINS | RUNTIME_NAMES | LIBRARY_NAMES

#: Types whose pointed-to elements count toward load/store byte traffic.
FLOAT_SIZEOF = {"double": 8, "float": 4}
