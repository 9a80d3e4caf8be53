"""Build script for the optional compiled stepping kernel.

The package is fully functional without the extension: ``fiberlay.kernels``
falls back to a vectorised numpy backend when the compiled module is missing
(or when FIBERLAY_KERNELS=python is set).  Building with Cython just makes the
per-path integrators faster.
"""

import numpy
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "fiberlay.kernels._native",
                ["src/fiberlay/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
