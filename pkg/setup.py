"""Build script: compiles the optional native solver kernels.

The package is fully functional without the extension (a pure-Python
fallback is selected at import); the build therefore tolerates a missing
Cython or C compiler instead of failing the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "sflgame._kernels._native",
                ["src/sflgame/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
