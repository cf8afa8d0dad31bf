"""Lexer front door: selects the compiled extension when available.

Set ``COUNTERSCOPE_PURE_PYTHON=1`` to force the pure-Python implementation
(useful for debugging and for the benchmark baseline).
"""

from __future__ import annotations

import os

from ._lexer_py import CHAR, IDENT, NUMBER, PREPROC, PUNCT, STRING

if os.environ.get("COUNTERSCOPE_PURE_PYTHON"):
    from . import _lexer_py as _impl
else:
    try:
        from . import _lexer as _impl  # compiled extension
    except ImportError:
        from . import _lexer_py as _impl

tokenize = _impl.tokenize
BACKEND: str = _impl.BACKEND

__all__ = [
    "tokenize",
    "BACKEND",
    "IDENT",
    "NUMBER",
    "STRING",
    "CHAR",
    "PUNCT",
    "PREPROC",
]
