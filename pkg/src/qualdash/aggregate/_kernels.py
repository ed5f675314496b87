"""Kernel dispatch: compiled extension when present, pure python otherwise.

Set QUALDASH_PURE_KERNELS=1 to force the fallback (useful for timing the
two implementations against each other and for debugging).
"""

from __future__ import annotations

import os
from array import array

from . import _pykernels

if os.environ.get("QUALDASH_PURE_KERNELS"):
    _impl = _pykernels
    BACKEND = "pure"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "pure"


def _i64(seq) -> array:
    return seq if isinstance(seq, array) else array("q", seq)


def _f64(seq) -> array:
    return seq if isinstance(seq, array) else array("d", seq)


def count_by_bin(days, edges) -> list[int]:
    if len(edges) < 2:
        return []
    return _impl.count_by_bin(_i64(days), _i64(edges))


def sum_by_bin(days, values, edges) -> tuple[list[float], list[int]]:
    if len(edges) < 2:
        return [], []
    return _impl.sum_by_bin(_i64(days), _f64(values), _i64(edges))


def interval_days_by_bin(starts, ends, edges) -> list[int]:
    if len(edges) < 2:
        return []
    return _impl.interval_days_by_bin(_i64(starts), _i64(ends), _i64(edges))
