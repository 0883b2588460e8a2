"""Stepping-kernel lane selection.

The compiled Cython kernel is preferred when the extension built; the
pure-numpy lane is the fallback.  Set SPINCOLLAPSE_PURE_PYTHON=1 to force
the fallback, or request a lane explicitly per run via EngineOptions.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel  # type: ignore[attr-defined]
except ImportError:
    _kernel = None

_FORCE_PYTHON = os.environ.get("SPINCOLLAPSE_PURE_PYTHON", "") not in ("", "0")

LANES = {"python": _kernel_py}
if _kernel is not None:
    LANES["compiled"] = _kernel


def have_compiled() -> bool:
    return _kernel is not None


def default_lane_name() -> str:
    if _FORCE_PYTHON or _kernel is None:
        return "python"
    return "compiled"


def get_lane(name: str = "auto"):
    """Resolve a lane module by name ('auto', 'compiled', 'python')."""
    if name == "auto":
        name = default_lane_name()
    try:
        return LANES[name]
    except KeyError:
        if name == "compiled":
            raise RuntimeError(
                "compiled kernel requested but the extension is not built"
            ) from None
        raise ValueError(f"unknown kernel lane {name!r}") from None
