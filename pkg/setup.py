"""Build script: compiles the optional quadrature kernel.

The compiled extension is a pure accelerator.  If Cython or a C compiler is
unavailable the build falls through and the package installs with the numpy
fallback kernel (pfaffsys.quadrature picks whichever is importable).
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "pfaffsys._quadcore",
                sources=["src/pfaffsys/_quadcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    sys.stderr.write(f"pfaffsys: skipping compiled kernel ({exc!r})\n")

setup(ext_modules=ext_modules)
