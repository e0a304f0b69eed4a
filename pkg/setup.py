"""Build script for the optional compiled covariance core.

The package is fully functional without the extension (mfbo.covops falls
back to the numpy implementation), so any failure to build it downgrades
to a pure-Python install instead of aborting.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class BuildFailed(Exception):
    pass


class optional_build_ext(build_ext):
    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # missing compiler, broken toolchain, ...
            raise BuildFailed(str(exc)) from exc

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            raise BuildFailed(str(exc)) from exc


def ext_modules():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "mfbo._covcore",
                ["src/mfbo/_covcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )


def run(with_ext):
    setup(
        ext_modules=ext_modules() if with_ext else [],
        cmdclass={"build_ext": optional_build_ext} if with_ext else {},
    )


try:
    run(with_ext=True)
except BuildFailed as exc:
    sys.stderr.write(
        "\nWARNING: compiled covariance core failed to build (%s);\n"
        "         installing pure-Python version.\n\n" % exc
    )
    run(with_ext=False)
