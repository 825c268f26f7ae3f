"""Selects the compiled kernels when available, numpy fallbacks otherwise.

Set FAIRLTR_PURE_PYTHON=1 to force the fallbacks (used by the parity
tests and the backend benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCE_PY = os.environ.get("FAIRLTR_PURE_PYTHON", "") not in ("", "0")

_compiled = None
if not _FORCE_PY:
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

HAS_COMPILED = _compiled is not None
ACTIVE = "compiled" if HAS_COMPILED else "python"

pivot_loop = _compiled.pivot_loop if HAS_COMPILED else _kernels_py.pivot_loop

# Fused news-trial loop; None means the engine runs its python loop.
news_trial_kernel = _compiled.run_news_trial if HAS_COMPILED else None
