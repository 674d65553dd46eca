from setuptools import setup, Extension

import numpy as np

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext = Extension(
    "sdot._core",
    ["src/sdot/_core.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

if cythonize is not None:
    ext_modules = cythonize([ext], language_level="3")
else:
    # Source distributions without Cython fall back to the pure-Python kernels.
    ext_modules = []

setup(ext_modules=ext_modules)
