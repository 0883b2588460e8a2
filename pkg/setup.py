"""Build script for the compiled stepping kernel.

The extension is optional: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-numpy kernel at import
time.  The kernel links numpy's npyrandom library (the documented
extension mechanism for numpy.random) to draw Wiener increments in C, and
is built with -ffp-contract=off so its arithmetic stays bit-identical to
the numpy lane (no FMA contraction).
"""

import os

from setuptools import Extension, setup


def _ext_modules():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    random_lib = os.path.join(os.path.dirname(numpy.random.__file__), "lib")
    npymath_lib = os.path.join(numpy.get_include(), "..", "lib")
    return cythonize(
        [
            Extension(
                "spincollapse._kernel",
                ["src/spincollapse/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                library_dirs=[random_lib, npymath_lib],
                libraries=["npyrandom", "npymath", "m"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )


setup(ext_modules=_ext_modules())
