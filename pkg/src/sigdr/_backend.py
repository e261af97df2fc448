"""Select the kernel implementation at import time.

The compiled extension is preferred; ``SIGDR_BACKEND=python`` forces the
numpy fallback (useful for benchmarking and for checking the two agree).
"""
from __future__ import annotations

import os

from sigdr import _pykernels

if os.environ.get("SIGDR_BACKEND", "").lower() == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from sigdr import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        kernels = _pykernels
        BACKEND = "python"


def available():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        from sigdr import _ckernels  # noqa: F401
        names.insert(0, "cython")
    except ImportError:  # pragma: no cover
        pass
    return names


def get(name=None):
    """Kernel module by name (``None`` means the active one)."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from sigdr import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
