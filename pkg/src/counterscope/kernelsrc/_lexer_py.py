"""Pure-Python lexer for the restricted GPU-kernel source language.

This is the reference implementation and the fallback when the compiled
extension (``_lexer.pyx``) is not built. Both must produce identical token
streams; ``tests/test_lexer.py`` enforces that.

Tokens are ``(kind, text, start, end, line, col)`` tuples, with ``start`` and
``end`` as offsets into the source so callers can splice replacements while
preserving the surrounding bytes. Comments and whitespace are skipped.
"""

from __future__ import annotations

from ..errors import KernelParseError

IDENT = 1
NUMBER = 2
STRING = 3
CHAR = 4
PUNCT = 5
PREPROC = 6

BACKEND = "python"

# Maximal-munch punctuation, longest first. "<<<" / ">>>" are the kernel
# launch delimiters and must win over "<<" / ">>".
_PUNCT3 = ("<<<", ">>>", "<<=", ">>=")
_PUNCT2 = (
    "::", "->", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--",
)
_PUNCT1 = set("{}()[]<>+-*/%=;,?:.!&|^~")

_ID_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_ID_CONT = _ID_START | set("0123456789")
_DIGITS = set("0123456789")
_NUM_CONT = _ID_CONT | set(".'")


def tokenize(src: str) -> list:
    tokens = []
    n = len(src)
    i = 0
    line = 1
    line_start = 0
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if c in " \t\r":
            i += 1
            continue
        col = i - line_start + 1
        if c == "/" and i + 1 < n:
            nxt = src[i + 1]
            if nxt == "/":
                j = src.find("\n", i)
                i = n if j < 0 else j
                continue
            if nxt == "*":
                j = src.find("*/", i + 2)
                if j < 0:
                    raise KernelParseError("unterminated block comment", line, col)
                line += src.count("\n", i, j)
                if "\n" in src[i:j]:
                    line_start = src.rfind("\n", i, j) + 1
                i = j + 2
                continue
        if c == "#":
            j = src.find("\n", i)
            j = n if j < 0 else j
            tokens.append((PREPROC, src[i:j], i, j, line, col))
            i = j
            continue
        if c in _ID_START:
            j = i + 1
            while j < n and src[j] in _ID_CONT:
                j += 1
            tokens.append((IDENT, src[i:j], i, j, line, col))
            i = j
            continue
        if c in _DIGITS:
            j = i + 1
            while j < n and src[j] in _NUM_CONT:
                if src[j] in "eEpP" and j + 1 < n and src[j + 1] in "+-":
                    j += 2
                else:
                    j += 1
            tokens.append((NUMBER, src[i:j], i, j, line, col))
            i = j
            continue
        if c == '"' or c == "'":
            quote = c
            j = i + 1
            while j < n:
                if src[j] == "\\":
                    j += 2
                    continue
                if src[j] == quote:
                    break
                if src[j] == "\n":
                    raise KernelParseError("unterminated literal", line, col)
                j += 1
            if j >= n:
                raise KernelParseError("unterminated literal", line, col)
            kind = STRING if quote == '"' else CHAR
            tokens.append((kind, src[i : j + 1], i, j + 1, line, col))
            i = j + 1
            continue
        three = src[i : i + 3]
        if three in _PUNCT3:
            tokens.append((PUNCT, three, i, i + 3, line, col))
            i += 3
            continue
        two = src[i : i + 2]
        if two in _PUNCT2:
            tokens.append((PUNCT, two, i, i + 2, line, col))
            i += 2
            continue
        if c in _PUNCT1:
            tokens.append((PUNCT, c, i, i + 1, line, col))
            i += 1
            continue
        raise KernelParseError(f"unexpected character {c!r}", line, col)
    return tokens
