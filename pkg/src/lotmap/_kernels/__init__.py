"""Kernel backend selection.

Prefers the compiled extension, falling back to the pure NumPy/SciPy
implementations. Set ``LOTMAP_BACKEND=python`` or ``=compiled`` to force
one; forcing the compiled backend raises if the extension is missing.
"""

import os

from . import pure

OPTIMAL = pure.OPTIMAL
ITERATION_LIMIT = pure.ITERATION_LIMIT
INFEASIBLE = pure.INFEASIBLE

_forced = os.environ.get("LOTMAP_BACKEND", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise ValueError(
        f"LOTMAP_BACKEND must be 'compiled' or 'python', got {_forced!r}"
    )

if _forced == "python":
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = pure
        BACKEND = "python"

network_simplex = _impl.network_simplex
sinkhorn_logdomain = _impl.sinkhorn_logdomain

__all__ = [
    "BACKEND",
    "INFEASIBLE",
    "ITERATION_LIMIT",
    "OPTIMAL",
    "network_simplex",
    "sinkhorn_logdomain",
]
