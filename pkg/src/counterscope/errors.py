"""Exception types shared across the toolkit."""

from __future__ import annotations


class CounterscopeError(Exception):
    """Base class for all toolkit errors."""


class RangeViolationError(CounterscopeError):
    """A raw counter value falls outside its configured [floor, ceiling] range."""

    def __init__(self, metric: str, value: float, floor: float, ceiling: float):
        self.metric = metric
        self.value = value
        self.floor = floor
        self.ceiling = ceiling
        super().__init__(
            f"{metric}={value!r} outside configured range [{floor}, {ceiling}]"
        )


class ConfigError(CounterscopeError):
    """Bad or missing configuration: unknown metric range, memory level, backend, ..."""


class InputValidationError(CounterscopeError):
    """Structurally valid data carrying an out-of-contract value (e.g. a
    normalized counter outside [0, 1])."""


class GenerationError(CounterscopeError):
    """Kernel generator given an unsatisfiable spec."""


class KernelParseError(CounterscopeError):
    """Source does not parse under the restricted kernel grammar."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, col {col})" if line else message)


class OracleUnavailableError(CounterscopeError):
    """The analytic oracle cannot recover ground-truth metadata for this source."""


class ExtractionError(CounterscopeError):
    """Model output did not yield a valid counter block.

    ``kind`` is one of: no_block, ambiguous_blocks, bad_json, missing_keys,
    extra_keys, non_numeric, out_of_range, not_object. The offending raw text
    is always preserved for postmortem.
    """

    def __init__(self, kind: str, message: str, raw_text: str = ""):
        self.kind = kind
        self.raw_text = raw_text
        super().__init__(f"[{kind}] {message}")


class BackendUnavailableError(CounterscopeError):
    """A prediction backend is down or cannot serve the request."""

    def __init__(self, backend_id: str, message: str):
        self.backend_id = backend_id
        super().__init__(f"backend {backend_id!r}: {message}")


class HarvestError(CounterscopeError):
    """A corpus-harvest job failed permanently. Carries job provenance."""

    def __init__(self, kind: str, message: str, job=None):
        self.kind = kind
        self.job = job
        super().__init__(f"[{kind}] {message}")


class DataError(CounterscopeError):
    """Malformed input data (non-finite value, negative ground truth, ...)."""


class EvalError(CounterscopeError):
    """Evaluation cannot proceed (e.g. empty test set)."""
