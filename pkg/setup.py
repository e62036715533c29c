"""Build the optional compiled scan kernel; the package works without it."""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("DWORK_SEMISTABLE_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "dwork_semistable._scan",
        ["src/dwork_semistable/_scan.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
