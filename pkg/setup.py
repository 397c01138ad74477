from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "polyshoot.kernels._rk45_cy",
                ["src/polyshoot/kernels/_rk45_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython: the pure-Python kernel is used at runtime.
    ext_modules = []

setup(ext_modules=ext_modules)
