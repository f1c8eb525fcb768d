"""Kernel backend selection.

The compiled Cython extension is used when it imports; otherwise (or when
``DYADIC_FACTOR_PURE=1``) the numpy implementations are used.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("DYADIC_FACTOR_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

square_function_l1 = _impl.square_function_l1
bmo_union_max = _impl.bmo_union_max


def backends():
    """All importable backends by name, for tests and benchmarks."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
