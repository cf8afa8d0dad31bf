#!/usr/bin/env python3
"""Benchmark: compiled lexer extension vs the pure-Python fallback.

Tokenization is the hot inner loop of dataset construction — every sample is
lexed for fingerprinting, renaming, and metadata cross-checks — so the
compiled path is what makes million-sample corpora practical.

Usage:
    python benchmarks/bench_lexer.py [--kernels 400] [--repeats 5]
"""

from __future__ import annotations

import argparse
import time

from counterscope.kernelsrc import KernelGenSpec, generate, fingerprint_source
from counterscope.kernelsrc import _lexer_py

try:
    from counterscope.kernelsrc import _lexer as _lexer_cy
except ImportError:
    _lexer_cy = None


def build_corpus(n: int) -> list[str]:
    sources = []
    for i in range(n):
        spec = KernelGenSpec(
            num_inputs=1 + i % 3,
            num_outputs=1 + i % 2,
            num_loads=1 + i % 4,
            num_compute=i % 24,
            num_stores=1 + i % 2,
            dtype="float64" if i % 2 else "float32",
            seed=i,
        )
        sources.append(generate(spec).source)
    return sources


def time_backend(tokenize, corpus: list[str], repeats: int) -> tuple[float, int]:
    tokens = 0
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        tokens = sum(len(tokenize(src)) for src in corpus)
        best = min(best, time.perf_counter() - start)
    return best, tokens


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kernels", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    corpus = build_corpus(args.kernels)
    total_bytes = sum(len(s) for s in corpus)
    print(f"corpus: {args.kernels} kernels, {total_bytes / 1024:.0f} KiB")

    py_time, py_tokens = time_backend(_lexer_py.tokenize, corpus, args.repeats)
    print(f"pure python : {py_time * 1e3:8.2f} ms  "
          f"({py_tokens / py_time / 1e6:6.2f} Mtok/s)")

    if _lexer_cy is None:
        print("compiled    : not built (pip install -e . to compile)")
        return

    cy_time, cy_tokens = time_backend(_lexer_cy.tokenize, corpus, args.repeats)
    assert cy_tokens == py_tokens, "backends disagree on token count"
    print(f"compiled    : {cy_time * 1e3:8.2f} ms  "
          f"({cy_tokens / cy_time / 1e6:6.2f} Mtok/s)")
    print(f"speedup     : {py_time / cy_time:8.2f}x")

    # end-to-end effect on the fingerprint path (lex + canonicalize + hash)
    start = time.perf_counter()
    for src in corpus:
        fingerprint_source(src)
    fp_time = time.perf_counter() - start
    print(f"fingerprints: {fp_time * 1e3:8.2f} ms with selected backend "
          f"({args.kernels / fp_time:,.0f} kernels/s)")


if __name__ == "__main__":
    main()
