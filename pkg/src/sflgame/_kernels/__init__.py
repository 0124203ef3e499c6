"""Backend selection for the hot solver loops.

The compiled extension is used when it was built; otherwise the pure
Python implementation takes over transparently.  Set ``SFLGAME_PURE=1``
to force the fallback (useful for debugging and benchmarking).
"""

import os

from . import pure

if os.environ.get("SFLGAME_PURE"):
    _impl = pure
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
br_iterate = _impl.br_iterate
projected_ascent = _impl.projected_ascent
