"""Kernel dispatch: compiled Cython loops when built, numpy otherwise.

Set ``MULTIBEAM_PURE_PYTHON=1`` before import to force the numpy path.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MULTIBEAM_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

toeplitz_sums = _impl.toeplitz_sums
ratio_grid_argmax = _impl.ratio_grid_argmax
# a compiled loop measured no faster than numpy's einsum here
hermitian_forms = _kernels_py.hermitian_forms

__all__ = ["BACKEND", "toeplitz_sums", "ratio_grid_argmax", "hermitian_forms"]
