"""Hot-path correlation kernels with a compiled core and a NumPy fallback.

The compiled backend (Cython) is picked at import time when available;
otherwise the NumPy implementation is used.  Both expose the same four
functions and agree to float round-off.  Set CONVDICT_KERNELS=py or
CONVDICT_KERNELS=c to force a backend (forcing "c" raises if the
extension was not built).
"""

import os

import numpy as np

from . import _pykern

_forced = os.environ.get("CONVDICT_KERNELS", "").strip().lower()
if _forced not in ("", "c", "py"):
    raise ImportError(f"CONVDICT_KERNELS must be 'c' or 'py', got {_forced!r}")

_impl = None
if _forced in ("", "c"):
    try:
        from . import _ckern as _impl
    except ImportError:
        if _forced == "c":
            raise
        _impl = None
if _impl is None:
    _impl = _pykern

BACKEND = "c" if _impl is not _pykern else "python"


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def corr2d(x, f):
    """Valid correlation of a 2-D array with a 2-D filter (no flip)."""
    return _impl.corr2d(_c64(x), _c64(f))


def conv_forward(x, w):
    """Multi-channel valid correlation: (cin,h,w) x (cout,cin,k,k) -> (cout,h',w')."""
    return _impl.conv_forward(_c64(x), _c64(w))


def conv_grad_w(x, gy):
    """Filter gradient of conv_forward for upstream gradient gy."""
    return _impl.conv_grad_w(_c64(x), _c64(gy))


def conv_grad_x(w, gy):
    """Input gradient of conv_forward for upstream gradient gy."""
    return _impl.conv_grad_x(_c64(w), _c64(gy))
