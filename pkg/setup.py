import os

from setuptools import setup

ext_modules = []
if os.environ.get("NLTSA_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "nltsa._ckernels",
                    ["src/nltsa/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3", "-fopenmp"],
                    extra_link_args=["-fopenmp"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
