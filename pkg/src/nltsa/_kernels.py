"""Picks the compiled kernels when available, the numpy versions otherwise.

Set ``NLTSA_PURE_PYTHON=1`` to force the fallback. ``NLTSA_THREADS`` caps
the OpenMP threads used by the compiled pair counter (default 1).
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("NLTSA_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass


def threads() -> int:
    try:
        return max(1, int(os.environ.get("NLTSA_THREADS", "1")))
    except ValueError:
        return 1


def pair_counts(pts, tidx, eps2, theiler):
    return _impl.pair_counts(
        np.ascontiguousarray(pts, dtype=float),
        np.ascontiguousarray(tidx, dtype=np.int64),
        np.ascontiguousarray(eps2, dtype=float),
        int(theiler),
        threads(),
    )


def nearest_neighbors(pts, tidx, theiler):
    return _impl.nearest_neighbors(
        np.ascontiguousarray(pts, dtype=float),
        np.ascontiguousarray(tidx, dtype=np.int64),
        int(theiler),
    )


def _u8(R):
    return np.ascontiguousarray(R, dtype=np.uint8)


def diagonal_lines(R):
    return _impl.diagonal_lines(_u8(R))


def vertical_lines(R):
    return _impl.vertical_lines(_u8(R))


def recurrence_times(R):
    return _impl.recurrence_times(_u8(R))
