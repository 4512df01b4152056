"""Kernel dispatch: compiled Cython core when importable, numpy otherwise.

Set ``ADAPTMC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("ADAPTMC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

rescale_accumulate = _impl.rescale_accumulate
project_residual = _impl.project_residual
orthogonalize = _impl.orthogonalize
mark_seen = _impl.mark_seen

__all__ = [
    "BACKEND",
    "rescale_accumulate",
    "project_residual",
    "orthogonalize",
    "mark_seen",
]
