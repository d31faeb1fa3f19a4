import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "v2icpd.detectors._ckernels",
                ["src/v2icpd/detectors/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no -ffast-math: the fallback must agree bit for bit
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
