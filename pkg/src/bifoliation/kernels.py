"""Backend selection for the numeric kernels.

The compiled extension is used when it imports; setting the environment
variable ``BIFOLIATION_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py
from ._kernels_py import InverseError, RootFindingError

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("BIFOLIATION_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

charpoly = _impl.charpoly
aberth = _impl.aberth
hopf_stereo_inverse = _impl.hopf_stereo_inverse
hopf_stereo_orbit = _impl.hopf_stereo_orbit

__all__ = ["BACKEND", "charpoly", "aberth", "hopf_stereo_inverse", "hopf_stereo_orbit",
           "InverseError", "RootFindingError"]
