"""Build the optional compiled kernels; the package works without them."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BIFOLIATION_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("bifoliation._speedups", ["src/bifoliation/_speedups.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": 3, "boundscheck": False, "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
