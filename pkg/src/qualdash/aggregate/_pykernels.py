"""Pure-python reference kernels.

Same contracts as the compiled module; the dispatcher picks whichever is
available.  Inputs are integer day ordinals (and float values), edges are
ascending half-open bin boundaries from bin_edges_ordinals.
"""

from __future__ import annotations

from bisect import bisect_right


def count_by_bin(days, edges):
    n = len(edges) - 1
    counts = [0] * n
    lo = edges[0]
    hi = edges[n]
    for d in days:
        if lo <= d < hi:
            counts[bisect_right(edges, d) - 1] += 1
    return counts


def sum_by_bin(days, values, edges):
    n = len(edges) - 1
    sums = [0.0] * n
    counts = [0] * n
    lo = edges[0]
    hi = edges[n]
    for d, v in zip(days, values):
        if lo <= d < hi:
            i = bisect_right(edges, d) - 1
            sums[i] += v
            counts[i] += 1
    return sums, counts


def interval_days_by_bin(starts, ends, edges):
    """Distribute half-open [start, end) day intervals over the bins.

    Each interval is clipped to the edge range first; a day contributes to
    the bin it falls in, so the per-interval contribution is the overlap
    length with each bin.
    """
    n = len(edges) - 1
    days = [0] * n
    lo = edges[0]
    hi = edges[n]
    for s, e in zip(starts, ends):
        cs = max(s, lo)
        ce = min(e, hi)
        if ce <= cs:
            continue
        i = bisect_right(edges, cs) - 1
        while i < n and edges[i] < ce:
            upper = edges[i + 1]
            overlap = (ce if ce < upper else upper) - (cs if cs > edges[i] else edges[i])
            days[i] += overlap
            i += 1
    return days
