"""Build script: compiles the optional C relation kernel when Cython is available.

The package is fully functional without the extension; ``summachine.kernels``
falls back to a pure-Python backend at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping C kernel build ({exc}); pure backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); pure backend will be used")


def extensions():
    import os

    if not os.path.exists("src/summachine/kernels/_speed.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; pure backend will be used")
        return []
    return cythonize(
        [
            Extension(
                "summachine.kernels._speed",
                ["src/summachine/kernels/_speed.pyx"],
            )
        ],
        language_level="3",
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
