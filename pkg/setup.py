import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fracstab._history_ext",
                ["src/fracstab/_history_ext.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-python backend is selected at import time when the extension
    # is unavailable
    ext_modules = []

setup(ext_modules=ext_modules)
