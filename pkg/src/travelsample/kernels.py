"""Kernel dispatch: the compiled extension when built, numpy otherwise.

Set ``TRAVELSAMPLE_PURE=1`` to force the numpy path.
"""
import os

from . import _kernels_py

BACKEND = "numpy"
if os.environ.get("TRAVELSAMPLE_PURE") != "1":
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

group_moments = _impl.group_moments
tabulate_sampled = _impl.tabulate_sampled
sample_mask = _impl.sample_mask

__all__ = ["BACKEND", "group_moments", "tabulate_sampled", "sample_mask"]
