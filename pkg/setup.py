"""Build script. Compiles the optional C extension with the hot kernels.

The package works without the extension: ``qdexciton._kernels`` falls back
to pure-numpy implementations when the compiled module is absent.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qdexciton._kernels._ckernels",
                sources=["src/qdexciton/_kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
