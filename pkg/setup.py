"""Build script for the compiled kernel extension.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed Cython build degrades to a warning instead of
aborting the install.
"""
import sys

from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("warning: Cython unavailable, building without compiled kernels\n")
        return []
    return cythonize(
        [Extension("wpsn._kernels", ["src/wpsn/_kernels.pyx"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=_extensions())
