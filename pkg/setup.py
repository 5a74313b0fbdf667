import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("UASRBRIDGE_SKIP_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "uasrbridge._kernels._convkernels",
                    ["src/uasrbridge/_kernels/_convkernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython at build time: install as pure Python, the package
        # falls back to the NumPy kernels at import.
        ext_modules = []

setup(ext_modules=ext_modules)
