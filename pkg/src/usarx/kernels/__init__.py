"""Episode kernels with a compiled fast path.

The Cython extension is used when the build produced it; otherwise the
pure-Python composition of the environment modules serves the same API.
Set USARX_PURE=1 to force the fallback (the benchmark and the equality
tests rely on this).
"""

from __future__ import annotations

import os

from . import pure
from .api import (
    BEHAVIOR_CODE,
    BEHAVIOR_NAME,
    TreeArrays,
    WorldArrays,
    tree_arrays,
    world_arrays,
)

_impl = pure
if os.environ.get("USARX_PURE", "") in ("", "0"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = "pure" if _impl is pure else "native"
fidelity_episode = _impl.fidelity_episode
collect_episode = _impl.collect_episode

__all__ = [
    "BACKEND",
    "BEHAVIOR_CODE",
    "BEHAVIOR_NAME",
    "TreeArrays",
    "WorldArrays",
    "collect_episode",
    "fidelity_episode",
    "tree_arrays",
    "world_arrays",
]
