"""Build script: compiles the optional Cython kernels.

The extension is marked optional so the package still installs (and falls
back to the pure-numpy kernels) on machines without a C toolchain.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "fairltr._kernels",
                ["src/fairltr/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # no Cython: install pure-python only
    extensions = []

setup(ext_modules=extensions)
