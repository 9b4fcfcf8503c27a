import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("BETDETECT_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "betdetect._ckernels",
                    ["src/betdetect/_ckernels.pyx"],
                    # no fast-math / FMA: results must match the Python fallback exactly
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
