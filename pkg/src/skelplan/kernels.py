"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``SKELPLAN_PURE_PYTHON=1`` forces the fallback
(both backends produce identical numbers, so this only affects speed).
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SKELPLAN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

clearance = _impl.clearance
clearance_many = _impl.clearance_many
is_free = _impl.is_free
segment_free = _impl.segment_free
nearest = _impl.nearest
thin = _impl.thin
NEIGHBORS = _kernels_py.NEIGHBORS


def backends():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
