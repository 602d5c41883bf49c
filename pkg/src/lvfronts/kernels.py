"""Select the compiled kernel when available; ``LVFRONTS_PURE=1`` forces the fallback."""
import os

from . import _kernels_py

if os.environ.get("LVFRONTS_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

BACKEND = _impl.BACKEND
imex_run = _impl.imex_run
BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
    BACKENDS["cython"] = _compiled
except ImportError:  # pragma: no cover
    pass
