"""Simulator for quantum online algorithms and their classical baselines."""

from __future__ import annotations

__all__ = [
    "__version__",
]

__version__ = "0.1.0"
