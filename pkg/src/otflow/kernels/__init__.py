"""Backend dispatch for the hot stencil kernels.

OTFLOW_BACKEND selects the implementation: "numba" (jitted loops), "numpy"
(vectorized fallback), or "auto" (numba when importable; the default).
OTFLOW_THREADS caps the numba worker count (0 or unset = auto).
"""
from __future__ import annotations

import os

import numpy as np

from . import numpy_backend

_numba_backend = None
_numba_error = None
try:
    from . import numba_backend as _numba_backend
except ImportError as exc:  # pragma: no cover - depends on environment
    _numba_error = exc


def numba_available() -> bool:
    return _numba_backend is not None


def get_backend_name() -> str:
    choice = os.environ.get("OTFLOW_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if numba_available() else "numpy"
    if choice == "numba":
        if not numba_available():
            raise RuntimeError(f"OTFLOW_BACKEND=numba but numba is unavailable: {_numba_error}")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"OTFLOW_BACKEND must be auto|numba|numpy, got {choice!r}")


def _backend(name=None):
    name = name or get_backend_name()
    if name == "numba":
        threads = int(os.environ.get("OTFLOW_THREADS", "0") or 0)
        _numba_backend.set_threads(threads)
        return _numba_backend
    return numpy_backend


def _unpack(geom):
    return (geom.y_u, geom.lnlam, geom.du, geom.dth, geom.cx, geom.cz,
            geom.perm_fwd, geom.perm_bwd)


def twisted_hessian(phi, geom, weight=1.0, backend=None):
    """(1/4 (d_xx + d_yy) field, 1/4 (d_pp + d_qq) field) on the grid chart."""
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    return _backend(backend).twisted_hessian(phi, *_unpack(geom), weight)


def rhs_core(phi, geom, beta, eb_coef, c_eff, backend=None):
    """Flow right-hand side plus reconstructed blocks (dphi, g_ww, g_zz)."""
    phi = np.ascontiguousarray(phi, dtype=np.float64)
    return _backend(backend).rhs_core(phi, *_unpack(geom), beta, eb_coef, c_eff)


def u_shift(field, k, geom, weight=1.0):
    return numpy_backend.u_shift(field, k, geom.perm_fwd, geom.perm_bwd, weight)


def first_diffs(field, geom, weight=1.0):
    return numpy_backend.first_diffs(field, geom.du, geom.dth,
                                     geom.perm_fwd, geom.perm_bwd, weight)


def smooth_pass(field, geom):
    return numpy_backend.smooth_pass(field, geom.perm_fwd, geom.perm_bwd)
