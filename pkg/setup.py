"""Build hook for the optional compiled cocycle kernel.

The package works without the extension (a pure numpy fallback is selected
at import time); any build failure here degrades to a pure-Python install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "limper._chain_cy",
        sources=["src/limper/_chain_cy.pyx"],
        include_dirs=[numpy.get_include()],
        # keep float semantics identical to the pure backend: no FMA contraction
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception:
    ext_modules = []

setup(ext_modules=ext_modules)
