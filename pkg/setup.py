"""Build script: compiles the optional ForceAtlas2 C kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only disables the fast path.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "techmap._fa2",
                ["src/techmap/_fa2.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(f"techmap: skipping C kernel build ({exc}); using NumPy fallback\n")

setup(ext_modules=ext_modules)
