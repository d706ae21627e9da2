"""Build script for the optional compiled core.

The package works without the extension; ``semipar._backend`` falls back to
the numpy implementation when ``semipar._core`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without Cython
    cythonize = None

EXT_MODULES = []
if cythonize is not None and not os.environ.get("SEMIPAR_NO_EXT"):
    EXT_MODULES = cythonize(
        [
            Extension(
                "semipar._core",
                [os.path.join("src", "semipar", "_core.pyx")],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "embedsignature": True,
        },
    )

setup(ext_modules=EXT_MODULES)
