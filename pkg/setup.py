"""Build script: compiles the optional geometry kernel extension.

The package works without the extension (a pure-Python backend is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken toolchain
            sys.stderr.write(
                f"warning: skipping native kernel build ({exc}); "
                "pure-Python kernels will be used\n"
            )

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(
                f"warning: failed to compile {ext.name} ({exc}); "
                "pure-Python kernels will be used\n"
            )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "railguard._kernels._native",
                ["src/railguard/_kernels/_native.pyx"],
                # keep IEEE multiply-add ordering so results match the pure
                # backend bit for bit (no FMA contraction)
                extra_compile_args=["-ffp-contract=off"],
            )
        ],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
