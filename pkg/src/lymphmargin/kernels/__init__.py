"""Dispatch to the numba or numpy implementation of each hot kernel.

The active backend is read on every call, so ``_backend.using_backend`` can
switch paths at runtime.
"""
from .. import _backend
from . import _np

__all__ = [
    "column_distance",
    "row_envelope_sq",
    "signed_bin_histogram",
    "cdtw_batch",
    "polygon_fill",
    "counter_uniform",
]


def _impl():
    if _backend.active() == "numba":
        from . import _nb

        return _nb
    return _np


def column_distance(target, out, inf):
    """Fill ``out`` with the per-column distance (in rows) to the nearest
    ``True`` cell of ``target``; ``inf`` marks columns with no target."""
    _impl().column_distance(target, out, inf)


def row_envelope_sq(g, inf):
    """Exact squared Euclidean distance from column distances ``g`` (int64),
    -1 where a row has no finite entry."""
    return _impl().row_envelope_sq(g, inf)


def signed_bin_histogram(labels, lymph, g_pos, g_neg, inf, mpp, bin_width,
                         kmin, nbins, pos_code, neg_code):
    return _impl().signed_bin_histogram(labels, lymph, g_pos, g_neg, inf, mpp,
                                        bin_width, kmin, nbins, pos_code, neg_code)


def cdtw_batch(a, b, radius):
    """Banded DTW cost for each row pair of ``a`` (P, n) and ``b`` (P, m)."""
    return _impl().cdtw_batch(a, b, radius)


def polygon_fill(xs, ys, out):
    """OR the even-odd interior (by pixel center) of one polygon into ``out``."""
    _impl().polygon_fill(xs, ys, out)


def counter_uniform(key0, key1, n, stream):
    return _impl().counter_uniform(key0, key1, n, stream)
