"""Builds the optional compiled kernels.

The package is fully functional without the extension (a pure-numpy
fallback is selected at import time); building it just makes training
faster. `python setup.py build_ext --inplace` works for development.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "molpla._fastkernels",
                sources=["src/molpla/_fastkernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
