"""Build the optional Cython kernels.

The package works without them: ``scramble_bound.kernels`` falls back to
the numpy implementation when the extension cannot be imported.  Set
``SCRAMBLE_NO_EXT=1`` to skip compilation entirely, or ``SCRAMBLE_NATIVE=1``
to tune the build for the host CPU.
"""
import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class BuildExt(build_ext):
    def build_extensions(self):
        compiler = getattr(self.compiler, "compiler_so", None) or [""]
        if "gcc" in os.path.basename(compiler[0]):
            # gcc fuses sin/cos of one argument into a call it cannot vectorize
            for ext in self.extensions:
                ext.extra_compile_args.append("-fdisable-tree-sincos")
        super().build_extensions()


ext_modules = []
if not os.environ.get("SCRAMBLE_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "scramble_bound._kernels",
                    ["src/scramble_bound/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffast-math"]
                    + (["-march=native"] if os.environ.get("SCRAMBLE_NATIVE") else []),
                    # glibc's vector math library backs the vectorized exp/sin/cos
                    libraries=["mvec", "m"] if sys.platform.startswith("linux") else [],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": BuildExt})
