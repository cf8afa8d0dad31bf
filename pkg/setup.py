"""Build script: compiles the optional fast lexer extension.

The package works without the extension (a pure-Python lexer is selected at
import time), so any build failure here degrades to the fallback instead of
breaking the install.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/counterscope/kernelsrc/_lexer.pyx"],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"counterscope: skipping fast lexer build ({exc}); pure-Python lexer will be used")

setup(ext_modules=ext_modules)
