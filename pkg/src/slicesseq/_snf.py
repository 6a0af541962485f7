"""Backend dispatch for Smith normal form.

The numba kernel handles the common case (small int64 entries) an order of
magnitude faster; the pure-Python backend is the exact fallback.  Setting
SLICESSEQ_NO_NUMBA=1 forces the fallback (and is what the benchmark flips).
"""

import os

from . import _snf_py

_DISABLED = os.environ.get("SLICESSEQ_NO_NUMBA", "") not in ("", "0")
_BACKEND = None


def _numba_backend():
    global _BACKEND
    if _BACKEND is None:
        try:
            from . import _snf_numba
            _BACKEND = _snf_numba
        except ImportError:
            _BACKEND = False
    return _BACKEND or None


def backend_name():
    if _DISABLED or _numba_backend() is None:
        return "python"
    return "numba"


def snf_transforms(mat):
    """(U, D, V) with U*mat*V = D; exact for arbitrary integer entries."""
    if not _DISABLED:
        nb = _numba_backend()
        if nb is not None and _fits_int64(mat):
            out = nb.snf_transforms_int64(mat)
            if out is not None:
                return out
    return _snf_py.snf_transforms(mat)


def snf_diagonal(mat):
    """Invariant-factor diagonal only; no transforms."""
    if not _DISABLED:
        nb = _numba_backend()
        if nb is not None and _fits_int64(mat):
            out = nb.snf_diagonal_int64(mat)
            if out is not None:
                return out
    return _snf_py.snf_diagonal(mat)


def _fits_int64(mat, bound=(1 << 31) - 1):
    for row in mat:
        for a in row:
            if a > bound or a < -bound:
                return False
    return True
