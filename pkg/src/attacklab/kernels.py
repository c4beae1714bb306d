"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise,
or when ``ATTACKLAB_PURE_PYTHON=1`` is set, the numpy fallback is used.
Both expose ``rk4_linear``, ``subset_norms`` and ``scan_chains``.
"""
from __future__ import annotations

import os

from attacklab import _pykernels

if os.environ.get("ATTACKLAB_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from attacklab import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

rk4_linear = _impl.rk4_linear
subset_norms = _impl.subset_norms
scan_chains = _impl.scan_chains


def available_backends() -> dict:
    """Map of backend name to kernel module, for tests and benchmarks."""
    out = {"python": _pykernels}
    try:
        from attacklab import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
