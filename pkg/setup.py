"""Build script.

The package is pure Python by default.  If Cython and a C compiler are
available, a compiled extension with the hot kernel loops is built; at
import time the package picks the compiled core when present and falls
back to the numpy implementation otherwise (see dirac4d._backend).

Build the extension in place with

    python setup.py build_ext --inplace

or just install the package; a failed extension build is not fatal.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("DIRAC4D_NO_EXT") != "1" and os.path.exists("src/dirac4d/_corex.pyx"):
    try:
        from Cython.Build import cythonize
        import numpy

        ext_modules = cythonize(
            ["src/dirac4d/_corex.pyx"],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": 3,
            },
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
            ext.extra_compile_args = ["-O3"]
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
