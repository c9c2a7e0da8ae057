"""Build hook for the optional compiled kernels.

The extension is marked optional: if Cython or a C compiler is missing the
package installs with the numpy fallback only.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "cnse._ckernels",
                ["src/cnse/_ckernels.pyx"],
                # no FMA contraction: keeps results bit-identical to the numpy path
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
