"""Kernel backend selection.

The hot loops (convolution gather/scatter, observation ray cast) have two
implementations: numba @njit (default) and pure numpy.  Set
STYLEFORGE_BACKEND=numpy to select the fallback; the choice is read once at
import time.  benchmarks/bench_kernels.py compares the two.
"""

import os

_requested = os.environ.get("STYLEFORGE_BACKEND", "numba").strip().lower()

if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        f"STYLEFORGE_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numba":
    from . import numba_impl as _impl
else:
    from . import numpy_impl as _impl

BACKEND = _impl.BACKEND
nearest_centerline = _impl.nearest_centerline
render_observation = _impl.render_observation
im2col = _impl.im2col
conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward


def backend_name() -> str:
    return BACKEND
