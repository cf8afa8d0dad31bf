# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled lexer for the restricted GPU-kernel source language.

Mirrors ``_lexer_py.py`` exactly; that module is the behavioural reference.
Tokenization is the hot inner loop of dataset construction (every sample is
lexed for fingerprinting, renaming, and metadata cross-checks), which is why
this path exists. See ``benchmarks/bench_lexer.py`` for the comparison.
"""

from ..errors import KernelParseError

IDENT = 1
NUMBER = 2
STRING = 3
CHAR = 4
PUNCT = 5
PREPROC = 6

BACKEND = "cython"

cdef frozenset _PUNCT3 = frozenset(("<<<", ">>>", "<<=", ">>="))
cdef frozenset _PUNCT2 = frozenset((
    "::", "->", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "++", "--",
))
cdef frozenset _PUNCT1 = frozenset("{}()[]<>+-*/%=;,?:.!&|^~")


cdef inline bint _is_id_start(Py_UCS4 c):
    return (u'a' <= c <= u'z') or (u'A' <= c <= u'Z') or c == u'_'


cdef inline bint _is_digit(Py_UCS4 c):
    return u'0' <= c <= u'9'


cdef inline bint _is_id_cont(Py_UCS4 c):
    return _is_id_start(c) or _is_digit(c)


cdef inline bint _is_num_cont(Py_UCS4 c):
    return _is_id_cont(c) or c == u'.' or c == u"'"


def tokenize(str src):
    cdef Py_ssize_t n = len(src)
    cdef Py_ssize_t i = 0, j, line_start = 0
    cdef Py_ssize_t line = 1, col
    cdef Py_UCS4 c, nxt, quote
    tokens = []
    while i < n:
        c = src[i]
        if c == u'\n':
            line += 1
            i += 1
            line_start = i
            continue
        if c == u' ' or c == u'\t' or c == u'\r':
            i += 1
            continue
        col = i - line_start + 1
        if c == u'/' and i + 1 < n:
            nxt = src[i + 1]
            if nxt == u'/':
                j = src.find("\n", i)
                i = n if j < 0 else j
                continue
            if nxt == u'*':
                j = src.find("*/", i + 2)
                if j < 0:
                    raise KernelParseError("unterminated block comment", line, col)
                line += src.count("\n", i, j)
                if src.find("\n", i, j) >= 0:
                    line_start = src.rfind("\n", i, j) + 1
                i = j + 2
                continue
        if c == u'#':
            j = src.find("\n", i)
            j = n if j < 0 else j
            tokens.append((PREPROC, src[i:j], i, j, line, col))
            i = j
            continue
        if _is_id_start(c):
            j = i + 1
            while j < n and _is_id_cont(src[j]):
                j += 1
            tokens.append((IDENT, src[i:j], i, j, line, col))
            i = j
            continue
        if _is_digit(c):
            j = i + 1
            while j < n and _is_num_cont(src[j]):
                c = src[j]
                if (c == u'e' or c == u'E' or c == u'p' or c == u'P') and j + 1 < n and (src[j + 1] == u'+' or src[j + 1] == u'-'):
                    j += 2
                else:
                    j += 1
            tokens.append((NUMBER, src[i:j], i, j, line, col))
            i = j
            continue
        if c == u'"' or c == u"'":
            quote = c
            j = i + 1
            while j < n:
                if src[j] == u'\\':
                    j += 2
                    continue
                if src[j] == quote:
                    break
                if src[j] == u'\n':
                    raise KernelParseError("unterminated literal", line, col)
                j += 1
            if j >= n:
                raise KernelParseError("unterminated literal", line, col)
            tokens.append((STRING if quote == u'"' else CHAR, src[i:j + 1], i, j + 1, line, col))
            i = j + 1
            continue
        if i + 3 <= n and src[i:i + 3] in _PUNCT3:
            tokens.append((PUNCT, src[i:i + 3], i, i + 3, line, col))
            i += 3
            continue
        if i + 2 <= n and src[i:i + 2] in _PUNCT2:
            tokens.append((PUNCT, src[i:i + 2], i, i + 2, line, col))
            i += 2
            continue
        if src[i:i + 1] in _PUNCT1:
            tokens.append((PUNCT, src[i:i + 1], i, i + 1, line, col))
            i += 1
            continue
        raise KernelParseError(f"unexpected character {src[i:i + 1]!r}", line, col)
    return tokens
