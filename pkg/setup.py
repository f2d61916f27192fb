"""Build script for the optional compiled kernel core.

The package works without the extension (a numpy fallback is selected at
import time); set ACTIONSEQ_PURE=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

extensions = []
if not os.environ.get("ACTIONSEQ_PURE"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "actionseq._core",
                    ["src/actionseq/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("cython/numpy not available at build time; building pure-python package")

setup(ext_modules=extensions)
