"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``VARREG_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if os.environ.get("VARREG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import fm_solve, polyline_distance  # noqa: F401

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        pass

if BACKEND == "python":
    from ._kernels_py import fm_solve, polyline_distance  # noqa: F401

__all__ = ["BACKEND", "fm_solve", "polyline_distance"]
