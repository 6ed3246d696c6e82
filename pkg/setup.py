"""Build the optional compiled simulation kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("SPDC_NO_EXTENSION", "") in ("", "0"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("spdc.sim._kernel", ["src/spdc/sim/_kernel.pyx"],
                       include_dirs=[numpy.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                       extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"])],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
