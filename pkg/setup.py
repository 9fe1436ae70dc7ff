import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Without Cython the package still installs; the NumPy kernel fallback
    # is selected at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "anchorqp._kernels._core",
                ["src/anchorqp/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
