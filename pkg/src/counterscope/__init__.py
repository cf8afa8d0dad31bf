"""counterscope: GPU kernel performance-counter prediction toolkit.

Builds code-to-counters datasets (synthetic generation, AI-harvested corpora,
profiler ingestion), serves counter predictions from pluggable backends
without executing the code, and evaluates prediction quality with
relative-error threshold tables.
"""

from .metrics import (
    CounterVector,
    MachinePeaks,
    MemLevel,
    Metric,
    NormRanges,
    NormalizedCounters,
    RooflinePoint,
    arithmetic_intensity,
    attainable_performance,
    denormalize,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "CounterVector",
    "MachinePeaks",
    "MemLevel",
    "Metric",
    "NormRanges",
    "NormalizedCounters",
    "RooflinePoint",
    "arithmetic_intensity",
    "attainable_performance",
    "denormalize",
    "normalize",
    "__version__",
]
