"""Selects the compiled kernels when available.

Set ``MOTIONAUG_PURE_PYTHON=1`` to force the NumPy implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MOTIONAUG_PURE_PYTHON") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

NAME = "python" if kernels is _kernels_py else "cython"


def use(name: str) -> None:
    """Switch backend at runtime (``"python"`` or ``"cython"``)."""
    global kernels, NAME
    if name == "python":
        kernels, NAME = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels

        kernels, NAME = _kernels, "cython"
    else:
        raise ValueError(f"unknown backend {name!r}")
