"""Backend selection for the inner loops.

The compiled extension ``wnil._core`` is used when it imports; otherwise the
numpy fallback is used. Setting ``WNIL_BACKEND=python`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("WNIL_BACKEND", "").lower() == "python":
        raise ImportError("fallback requested")
    from . import _core as _impl
    BACKEND = "compiled"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def _i(a):
    return np.ascontiguousarray(a, dtype=np.intp)


def _f(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def backend(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")


def stencil_sum(src, cy, cx, oy, ox, impl=None):
    """Sum of ``src`` over ``center + offset`` for every center."""
    return (impl or _impl).stencil_sum(_f(src), _i(cy), _i(cx), _i(oy), _i(ox))


def stencil_max(src, cy, cx, oy, ox, impl=None):
    return (impl or _impl).stencil_max(_f(src), _i(cy), _i(cx), _i(oy), _i(ox))


def scatter_max(dst, arg, cy, cx, oy, ox, vals, ids, impl=None):
    """In-place running max of ball values onto the cells each ball covers."""
    (impl or _impl).scatter_max(dst, arg, _i(cy), _i(cx), _i(oy), _i(ox),
                                _f(vals), np.ascontiguousarray(ids, dtype=np.int64))


def offset_sum(src, oy, ox, w, impl=None):
    return (impl or _impl).offset_sum(_f(src), _i(oy), _i(ox), _f(w))


def toeplitz(f, st, impl=None):
    return (impl or _impl).toeplitz(_f(f), _f(st))
