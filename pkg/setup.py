import os

from setuptools import Extension, setup

# The compiled Monte Carlo core is optional: if Cython or the numpy random
# C library are unavailable the build still succeeds and the package falls
# back to the numpy implementation at import time.
ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    rand_lib_dir = os.path.join(os.path.dirname(np.random.__file__), "lib")
    ext = Extension(
        "volterra_lift._mc_core",
        ["src/volterra_lift/_mc_core.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[rand_lib_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
