"""Kernel selection for exhaustive F_q scans.

The compiled kernel is used when it was built; otherwise the numpy
implementation.  Setting ``DWORK_SEMISTABLE_PURE=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _scan_py

try:
    if os.environ.get("DWORK_SEMISTABLE_PURE"):
        raise ImportError("pure fallback requested")
    from . import _scan as _compiled
except ImportError:
    _compiled = None

KERNEL = "cython" if _compiled is not None else "python"
evaluate_grid = _compiled.evaluate_grid if _compiled is not None else _scan_py.evaluate_grid


def kernels() -> dict:
    """Every available implementation, by name."""
    out = {"python": _scan_py.evaluate_grid}
    if _compiled is not None:
        out["cython"] = _compiled.evaluate_grid
    return out
