"""Build script for the optional compiled kernel core.

The extension accelerates the per-iteration likelihood kernels. If it fails
to build (no compiler, no Cython), the package still installs and falls back
to the pure-numpy backend at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np

    extensions = cythonize(
        [
            Extension(
                "outgraph.kernels._core",
                sources=["src/outgraph/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
