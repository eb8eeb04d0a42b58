"""Builds the optional compiled split-scan kernels.

The package works without them: slm._kernels falls back to the numpy
implementation when the extension is missing (see slm/_kernels/__init__.py).
Set SLM_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup


def ext_modules():
    if os.environ.get("SLM_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "slm._kernels._scan_cy",
        ["src/slm/_kernels/_scan_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=ext_modules())
