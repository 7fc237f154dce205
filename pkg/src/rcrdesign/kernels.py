"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
``RCRDESIGN_PURE_PYTHON`` environment variable is set to a non-empty value
other than ``0``, the numpy fallback is used.  ``BACKEND`` names the choice.
"""
import os

from rcrdesign import _kernels_py

if os.environ.get("RCRDESIGN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from rcrdesign import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

poly_quad_form = _impl.poly_quad_form
line_two_point_g = _impl.line_two_point_g
