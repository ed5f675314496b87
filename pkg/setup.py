from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "qualdash.aggregate._ckernels",
        sources=["src/qualdash/aggregate/_ckernels.pyx"],
        extra_compile_args=["-O3"],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, language_level="3")
else:
    # Pure-python kernels take over at import time; the wheel still works.
    ext_modules = []

setup(ext_modules=ext_modules)
