"""Relation kernels: compiled fast path with a pure-Python fallback."""

from __future__ import annotations

import os

from .common import (
    CO,
    CONF,
    IDENTITY,
    SEQ_BACKWARD,
    SEQ_FORWARD,
    UNCOVERED,
    KernelData,
    build_kernel_data,
)

if os.environ.get("SUMMACHINE_PURE"):
    from . import _pure as _backend
else:
    try:
        from . import _speed as _backend  # type: ignore[no-redef]
    except ImportError:
        from . import _pure as _backend

KERNEL_BACKEND: str = _backend.NAME


def build_kernel(sm, backend: str | None = None):
    """Build a relation kernel over a sum machine; backend overrides autodetect."""
    data = build_kernel_data(sm)
    if backend is None:
        return _backend.Kernel(data)
    if backend == "pure":
        from . import _pure

        return _pure.Kernel(data)
    if backend == "speed":
        from . import _speed

        return _speed.Kernel(data)
    raise ValueError(f"unknown kernel backend: {backend!r}")


__all__ = [
    "CO",
    "CONF",
    "IDENTITY",
    "SEQ_BACKWARD",
    "SEQ_FORWARD",
    "UNCOVERED",
    "KERNEL_BACKEND",
    "KernelData",
    "build_kernel",
    "build_kernel_data",
]
