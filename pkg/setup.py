"""Build script for the optional compiled event-sweep kernel.

The package works without the extension (a pure numpy fallback is selected at
import time), so a failed compile only costs speed.  Build in place with

    python3 setup.py build_ext --inplace
"""

from setuptools import Extension, setup

import numpy


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "weaknoise._grid_cy",
        sources=["src/weaknoise/_grid_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
