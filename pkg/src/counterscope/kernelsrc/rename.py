"""Variable-rename augmentation.

Replaces every user-defined identifier in a kernel source with a randomly
generated one (seeded, bijective), leaving language keywords, GPU builtins,
runtime API names, and member/qualified names untouched. Renaming is token
splicing, so all whitespace and comments survive byte-exact, and the
identifier-independent fingerprint is unchanged.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from ..errors import KernelParseError
from . import lexer
from .generator import GeneratedKernel
from .lang import RESERVED_IDENTIFIERS
from .parser import fingerprint_source, validate_restricted


@dataclass(frozen=True)
class RenameMap:
    """Bijection original identifier -> randomized identifier."""

    mapping: dict[str, str]
    seed: int

    def apply(self, name: str) -> str:
        return self.mapping.get(name, name)


def _random_identifier(rng: random.Random, taken: set[str]) -> str:
    while True:
        length = rng.randint(4, 10)
        name = rng.choice(string.ascii_lowercase) + "".join(
            rng.choice(string.ascii_lowercase + string.digits + "_") for _ in range(length - 1)
        )
        if name not in RESERVED_IDENTIFIERS and name not in taken and "__" not in name:
            return name


def _renameable_occurrences(tokens) -> list[int]:
    """Indices of identifier tokens eligible for renaming."""
    out = []
    for i, tok in enumerate(tokens):
        if tok[0] != lexer.IDENT:
            continue
        text = tok[1]
        if text in RESERVED_IDENTIFIERS or text.startswith("__"):
            continue
        prev = tokens[i - 1] if i > 0 else None
        if prev is not None and prev[0] == lexer.PUNCT and prev[1] in (".", "->", "::"):
            continue  # member access / qualified name tail
        out.append(i)
    return out


def build_rename_map(source: str, seed: int) -> RenameMap:
    """Derive the (deterministic) rename map without applying it."""
    mod = validate_restricted(source)
    if mod.diagnostics:
        first = mod.diagnostics[0]
        raise KernelParseError(first.message, first.line, first.col)
    rng = random.Random(seed)
    mapping: dict[str, str] = {}
    taken: set[str] = set()
    for i in _renameable_occurrences(mod.tokens):
        name = mod.tokens[i][1]
        if name not in mapping:
            fresh = _random_identifier(rng, taken)
            mapping[name] = fresh
            taken.add(fresh)
    return RenameMap(mapping, seed)


def rename_source(source: str, seed: int) -> tuple[str, RenameMap]:
    """Apply a fresh seeded rename map; returns (new source, map)."""
    rmap = build_rename_map(source, seed)
    tokens = lexer.tokenize(source)
    eligible = set(_renameable_occurrences(tokens))
    pieces = []
    cursor = 0
    for i, tok in enumerate(tokens):
        if i in eligible and tok[1] in rmap.mapping:
            start, end = tok[2], tok[3]
            pieces.append(source[cursor:start])
            pieces.append(rmap.mapping[tok[1]])
            cursor = end
    pieces.append(source[cursor:])
    return "".join(pieces), rmap


def rename_variables(kernel, seed: int):
    """Rename user identifiers in a source string or ``GeneratedKernel``.

    Semantics-preserving: the fingerprint (and, for generated kernels, the
    analytic metadata) is unchanged.
    """
    if isinstance(kernel, GeneratedKernel):
        new_source, _ = rename_source(kernel.source, seed)
        fp = fingerprint_source(new_source)
        return GeneratedKernel(new_source, kernel.metadata, kernel.spec, fp)
    new_source, _ = rename_source(kernel, seed)
    return new_source
