"""Kernel backend selection.

The compiled extension (``_kernels``) is preferred when importable; the
NumPy implementation (``_kernels_py``) is a drop-in fallback. Setting the
environment variable ``COLDSTART_AL_PURE_PYTHON=1`` forces the fallback,
which is how the benchmark compares the two.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("COLDSTART_AL_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

propagation_sweep = _impl.propagation_sweep
edge_kl_sum = _impl.edge_kl_sum


def backend_name() -> str:
    return BACKEND
