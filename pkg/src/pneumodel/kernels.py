"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback. Set ``PNEUMODEL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("PNEUMODEL_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"
bellow_f3d = _impl.bellow_f3d
