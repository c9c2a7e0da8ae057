"""Backend selection for the pointwise kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise
the numpy implementation in ``_pykernels`` takes over. Setting
``CNSE_KERNELS=python`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


def _select():
    wanted = os.environ.get("CNSE_KERNELS", "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            raise ImportError(f"CNSE_KERNELS={wanted!r} is not available (have {sorted(BACKENDS)})")
        return BACKENDS[wanted]
    return BACKENDS.get("cython", _pykernels)


_backend = _select()


def backend_name():
    return _backend.NAME


def use_backend(name):
    """Switch the active backend at runtime (benchmarks and tests)."""
    global _backend
    _backend = BACKENDS[name]


def _flat(a, lead):
    return np.ascontiguousarray(a, dtype=np.float64).reshape(lead + (-1,))


def calm(code, eps, u):
    """Apply calming kind ``code`` pointwise to ``u`` of shape (3, ...)."""
    shape = u.shape
    return _backend.calm(int(code), float(eps), _flat(u, (3,))).reshape(shape)


def lamb(a, b):
    shape = a.shape
    return _backend.lamb(_flat(a, (3,)), _flat(b, (3,))).reshape(shape)


def advect(w, grad):
    shape = w.shape
    return _backend.advect(_flat(w, (3,)), _flat(grad, (3, 3))).reshape(shape)


def max_norm(w):
    return float(_backend.max_norm(_flat(w, (3,))))


def _kvec(grid):
    m = grid.modes
    return m.kx1, m.ky1, m.kz1


def _as_complex(out):
    return out.view(np.complex128) if out.dtype == np.float64 else out


def _spectral_input(c):
    c = np.ascontiguousarray(c, dtype=np.complex128)
    return c.view(np.float64) if _backend is not _pykernels else c


def project_masked(c, grid, mask):
    """Leray projection of ``c * mask`` with the mean removed."""
    return _as_complex(_backend.project_masked(_spectral_input(c), *_kvec(grid), mask.view(np.uint8)))


def curl(c, grid):
    return _as_complex(_backend.curl(_spectral_input(c), *_kvec(grid)))


def gradient(c, grid):
    return _as_complex(_backend.gradient(_spectral_input(c), *_kvec(grid)))
