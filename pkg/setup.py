import os

import numpy as np
from setuptools import Extension, setup

# The kernel extension is optional: without Cython (or a compiler) the package
# falls back to the pure-Python kernels in pdadapt/_fallback.py.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "pdadapt._kernels",
                sources=[os.path.join("src", "pdadapt", "_kernels.pyx")],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
