"""Hot loops, backed by the compiled extension when it is importable.

Set ``HYBRIDDP_PURE_PYTHON=1`` to force the NumPy fallback. ``BACKEND`` names
the implementation in use.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("HYBRIDDP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

BACKENDS = {"python": _kernels_py}
if BACKEND == "compiled":
    BACKENDS["compiled"] = _impl


def fwht(values):
    """Return the unnormalized Walsh-Hadamard transform of ``values`` (a copy)."""
    a = np.array(values, dtype=np.float64, copy=True)
    return _impl.fwht(a)


def parity_and(a, b):
    a = np.ascontiguousarray(a, dtype=np.uint64)
    b = np.ascontiguousarray(b, dtype=np.uint64)
    return _impl.parity_and(a, b)


def hadamard_encode(items, rows, uniforms, keep):
    return _impl.hadamard_encode(
        np.ascontiguousarray(items, dtype=np.uint64),
        np.ascontiguousarray(rows, dtype=np.uint64),
        np.ascontiguousarray(uniforms, dtype=np.float64),
        float(keep),
    )


def signed_row_sums(rows, bits, size):
    return _impl.signed_row_sums(
        np.ascontiguousarray(rows, dtype=np.uint64),
        np.ascontiguousarray(bits, dtype=np.int8),
        int(size),
    )
