"""Build script: compiles the GRU kernel extension unless VQA_SKIP_EXT=1.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed or skipped compile only costs speed.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("VQA_SKIP_EXT", "") != "1":
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "temporalvqa._gru_ext",
                ["src/temporalvqa/_gru_ext.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
