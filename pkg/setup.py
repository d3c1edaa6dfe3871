"""Build script: compiles the native fused-lasso kernel when Cython and a C
compiler are available, and falls back to the pure-Python implementation
otherwise.  The package is fully functional either way."""

from __future__ import annotations

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/dfsl/_native/_flsa.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - exercised only without Cython
    print(f"native extension disabled ({exc}); using pure-Python kernels",
          file=sys.stderr)
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
