"""Backend selection for the simulator kernels.

The compiled extension is used when it imports; otherwise the numpy versions
are used.  Setting ``EINMAX_PURE_PYTHON=1`` forces the numpy backend.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCE_PY = os.environ.get("EINMAX_PURE_PYTHON", "").strip().lower() not in ("", "0", "false", "no")

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_impl = _compiled if (_compiled is not None and not _FORCE_PY) else _kernels_py

BACKEND: str = _impl.BACKEND
leapfrog_step = _impl.leapfrog_step
em_stress = _impl.em_stress
field_strength = _kernels_py.field_strength
stress_from_field_strength = _kernels_py.stress_from_field_strength
SYM_INDEX = _kernels_py.SYM_INDEX
ANTI_INDEX = _kernels_py.ANTI_INDEX


def compiled_available() -> bool:
    return _compiled is not None


def forced_pure() -> bool:
    return _FORCE_PY


def backends() -> dict:
    """Both implementations keyed by name (the compiled one only if built)."""
    out = {"numpy": _kernels_py}
    if _compiled is not None:
        out["cython"] = _compiled
    return out
