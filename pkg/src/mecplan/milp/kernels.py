"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``MECPLAN_PURE_PYTHON=1`` to force the fallback.
"""

import os
from types import ModuleType

from . import _kernels_py

BACKEND = "python"
_compiled: ModuleType = None  # type: ignore[assignment]

if not os.environ.get("MECPLAN_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _compiled = None  # type: ignore[assignment]


def get(name: str = "auto") -> ModuleType:
    """Return a kernel module: ``"auto"``, ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built (pip install -e . builds them)")
        return _compiled
    if name != "auto":
        raise ValueError(f"unknown kernel backend {name!r}")
    return _compiled if _compiled is not None else _kernels_py


def available() -> list:
    return ["python"] + (["cython"] if _compiled is not None else [])
