"""Build script. The compiled kernel extension is optional: if Cython or a C
compiler is unavailable the package installs anyway and falls back to the
pure-numpy kernels at import time."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/oblab/_kernels.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.extra_compile_args = ["-O3"]
except Exception as exc:  # pragma: no cover - depends on build env
    import warnings

    warnings.warn(f"building without compiled kernels: {exc}")

setup(ext_modules=ext_modules)
