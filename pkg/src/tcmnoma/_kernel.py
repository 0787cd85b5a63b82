"""Kernel selection: compiled extension when available, Python twin otherwise."""

try:
    from ._speedups import KERNEL_KIND, decode_unit
except ImportError:  # pragma: no cover - depends on build environment
    from ._kernel_py import KERNEL_KIND, decode_unit

__all__ = ["KERNEL_KIND", "decode_unit"]
