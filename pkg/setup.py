"""Builds the compiled correlation kernel.

The extension is optional: if Cython or a C toolchain is missing the install
still succeeds and the package falls back to the pure-numpy backend.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension(
            "msraft._corrkernel",
            ["src/msraft/_corrkernel.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )],
        language_level=3,
    )
    for ext in ext_modules:
        ext.optional = True

setup(ext_modules=ext_modules)
