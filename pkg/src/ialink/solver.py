"""Alignment solver backend selection.

The compiled extension is preferred when present; the pure numpy twin is
the fallback. Set IALINK_SOLVER to "compiled" or "python" to force one,
or leave it at "auto".
"""

from __future__ import annotations

import os

from . import _solver_np

_choice = os.environ.get("IALINK_SOLVER", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(f"IALINK_SOLVER must be auto, compiled or python, not {_choice!r}")

_compiled = None
if _choice in ("auto", "compiled"):
    try:
        from . import _solver_c as _compiled
    except ImportError:
        if _choice == "compiled":
            raise ImportError("compiled solver requested but the extension is not built")

if _compiled is not None:
    BACKEND = "compiled"
    solve_frames = _compiled.solve_frames
else:
    BACKEND = "python"
    solve_frames = _solver_np.solve_frames


def backends():
    """Mapping of available backend names to their solve functions."""
    table = {"python": _solver_np.solve_frames}
    try:
        from . import _solver_c
        table["compiled"] = _solver_c.solve_frames
    except ImportError:
        pass
    return table
