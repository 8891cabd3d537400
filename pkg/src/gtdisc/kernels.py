"""Hot-loop backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin is used. Setting ``GTDISC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _gray_py

if os.environ.get("GTDISC_PURE_PYTHON"):
    gray_scan = _gray_py.gray_scan
    BACKEND = "python"
else:
    try:
        from ._gray import gray_scan
        BACKEND = "cython"
    except ImportError:  # extension not built
        gray_scan = _gray_py.gray_scan
        BACKEND = "python"

__all__ = ["gray_scan", "BACKEND"]
