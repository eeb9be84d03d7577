"""Build script: compiles the optional Cython kernel.

The compiled extension is a pure speedup; if the toolchain is missing the
package installs anyway and falls back to the hashlib-based kernel.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "chaintrace.kernel._ckernel",
                sources=["src/chaintrace/kernel/_ckernel.pyx"],
                libraries=["crypto"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    sys.stderr.write(f"chaintrace: compiled kernel skipped ({exc}); "
                     "using pure-Python fallback\n")

setup(ext_modules=ext_modules)
