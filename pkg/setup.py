"""Build script: compiles the optional C extension for the hot kernels.

If Cython or a C compiler is unavailable the build degrades to the pure
NumPy kernels; the package selects the backend at import time.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: C extension build skipped ({exc}); "
                  "falling back to pure NumPy kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to pure NumPy kernels")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError as exc:
        print(f"warning: {exc}; building without the C extension")
        return []
    return cythonize(
        [
            Extension(
                "entromin._kernels",
                ["src/entromin/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
