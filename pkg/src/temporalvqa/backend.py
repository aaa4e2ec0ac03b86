"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the NumPy
fallback is used. Set VQA_BACKEND=py to force the fallback, VQA_BACKEND=ext
to require the extension (ImportError if missing).
"""

from __future__ import annotations

import os

_requested = os.environ.get("VQA_BACKEND", "auto").strip().lower()

if _requested in ("py", "python", "numpy"):
    from . import _gru_numpy as _kernels

    BACKEND = "numpy"
elif _requested in ("ext", "c", "compiled"):
    from . import _gru_ext as _kernels  # type: ignore[no-redef]

    BACKEND = "ext"
else:
    try:
        from . import _gru_ext as _kernels  # type: ignore[no-redef]

        BACKEND = "ext"
    except ImportError:
        from . import _gru_numpy as _kernels  # type: ignore[no-redef]

        BACKEND = "numpy"

layer_forward = _kernels.layer_forward
layer_backward = _kernels.layer_backward
