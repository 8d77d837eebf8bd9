"""Simulation backend selection.

RUIN_BACKEND=numba|numpy|auto picks the kernel set; auto prefers the JIT
kernels and silently falls back to the vectorized numpy ones when numba is
not importable. Both backends expose the same simulate_* surface.
"""

from __future__ import annotations

import os

__all__ = ["backend_name", "available_backends", "get_kernels"]


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def available_backends() -> list[str]:
    return ["numba", "numpy"] if _numba_available() else ["numpy"]


def backend_name() -> str:
    req = os.environ.get("RUIN_BACKEND", "auto").strip().lower()
    if req not in ("auto", "numba", "numpy"):
        raise ValueError(f"RUIN_BACKEND must be auto, numba or numpy, not '{req}'")
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not _numba_available():
            raise RuntimeError("RUIN_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if _numba_available() else "numpy"


def get_kernels(name: str | None = None):
    name = name or backend_name()
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend '{name}'")
    return mod
