"""Build script.

The alignment search kernel has an optional Cython build
(src/rulesynth/align/_search_cy.pyx). If Cython or a C compiler is
unavailable the package installs anyway and the pure-Python kernel is
selected at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/rulesynth/align/_search_cy.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception:
    ext_modules = []

setup(ext_modules=ext_modules)
