"""Build script.

The compiled kernel extension is optional: if Cython or a C compiler is
missing, the package installs with the pure-Python kernels only and selects
them at import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("QCSP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/qcsp/_kernels/_speed.pyx"],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
