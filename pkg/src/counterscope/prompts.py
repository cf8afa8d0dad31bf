"""Prompt templates shared by dataset rendering and serving.

The same renderer builds the user turn for training samples and for remote
prediction requests (training/serving parity), so it lives here rather than
in either consumer.
"""

from __future__ import annotations

from .errors import DataError
from .metrics import NormalizedCounters, render_counter_block

#: System prompt of prediction samples and prediction requests.
PREDICT_SYSTEM_PROMPT = (
    "You are an expert GPU programmer and profiler. "
    "Given a code, you will predict its performance counters."
)

#: System prompt used when harvesting kernels from a code-generation model.
HARVEST_SYSTEM_PROMPT = (
    "You are a skilled GPU programmer. Your response will be a GPU kernel "
    "with the proper includes and main file. The file should compile and run "
    "and use double or float data types and large problem sizes. Your "
    "response should not contain any special markdown formatting like "
    "```cpp or comments."
)

_USER_SENTENCE = (
    "For the GPU architecture {architecture} and the compiler flags {flags}, "
    "what are the bandwidth, arithmetic intensity, hit rates, flops of the "
    "following code? Output the answer in JSON format."
)

_USER_MARKER = (
    ", what are the bandwidth, arithmetic intensity, hit rates, flops of the "
    "following code? Output the answer in JSON format.\n\n"
)

_ASSISTANT_PREAMBLE = (
    "Here are the performance counters for the {architecture} GPU architecture "
    "and the {flags} compiler flags combination in JSON format: "
)


def render_user_prompt(source: str, architecture: str, flags: str) -> str:
    """User turn: configuration sentence, blank line, then the source verbatim."""
    sentence = _USER_SENTENCE.format(architecture=architecture, flags=flags)
    return f"{sentence}\n\n{source}"


def parse_user_prompt(user: str) -> tuple[str, str, str]:
    """Invert ``render_user_prompt``: returns (source, architecture, flags)."""
    idx = user.find(_USER_MARKER)
    if idx < 0:
        raise DataError("user turn does not match the prompt template")
    head = user[:idx]
    source = user[idx + len(_USER_MARKER):]
    prefix = "For the GPU architecture "
    if not head.startswith(prefix):
        raise DataError("user turn does not match the prompt template")
    head = head[len(prefix):]
    sep = " and the compiler flags "
    sep_idx = head.find(sep)
    if sep_idx < 0:
        raise DataError("user turn does not match the prompt template")
    architecture = head[:sep_idx]
    flags = head[sep_idx + len(sep):]
    return source, architecture, flags


def render_assistant_turn(norm: NormalizedCounters, architecture: str, flags: str) -> str:
    """Assistant turn: the preamble sentence plus one fenced JSON block."""
    preamble = _ASSISTANT_PREAMBLE.format(architecture=architecture, flags=flags)
    block = render_counter_block(norm, flags, architecture)
    return f"{preamble}\n\n```json\n{block}\n```"
