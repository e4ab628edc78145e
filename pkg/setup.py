"""Build script: compiles the optional greedy-assignment kernels.

The package works without the extension (a numpy fallback is selected at
import time); set AGGLOC_NO_EXTENSION=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
cmdclass = {}

if os.environ.get("AGGLOC_NO_EXTENSION") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "aggloc._kernels_cy",
                    ["src/aggloc/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules, cmdclass=cmdclass)
