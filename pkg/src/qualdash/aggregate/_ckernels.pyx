# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-record hot loops.

Contracts match _pykernels exactly; the test suite holds the two
implementations to identical outputs.  Callers guarantee at least one bin.
"""

import array


cdef Py_ssize_t _find_bin(const long long[:] edges, long long d) noexcept nogil:
    # Rightmost i with edges[i] <= d; caller guarantees d is in range.
    cdef Py_ssize_t lo = 0
    cdef Py_ssize_t hi = edges.shape[0] - 1
    cdef Py_ssize_t mid
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if edges[mid] <= d:
            lo = mid
        else:
            hi = mid
    return lo


def count_by_bin(const long long[:] days, const long long[:] edges):
    cdef Py_ssize_t n = edges.shape[0] - 1
    counts_arr = array.array("q", bytes(8 * n))
    cdef long long[::1] counts = counts_arr
    cdef long long lo = edges[0]
    cdef long long hi = edges[n]
    cdef Py_ssize_t k
    cdef long long d
    with nogil:
        for k in range(days.shape[0]):
            d = days[k]
            if lo <= d < hi:
                counts[_find_bin(edges, d)] += 1
    return list(counts_arr)


def sum_by_bin(const long long[:] days, const double[:] values,
               const long long[:] edges):
    cdef Py_ssize_t n = edges.shape[0] - 1
    sums_arr = array.array("d", bytes(8 * n))
    counts_arr = array.array("q", bytes(8 * n))
    cdef double[::1] sums = sums_arr
    cdef long long[::1] counts = counts_arr
    cdef long long lo = edges[0]
    cdef long long hi = edges[n]
    cdef Py_ssize_t k, i
    cdef long long d
    with nogil:
        for k in range(days.shape[0]):
            d = days[k]
            if lo <= d < hi:
                i = _find_bin(edges, d)
                sums[i] += values[k]
                counts[i] += 1
    return list(sums_arr), list(counts_arr)


def interval_days_by_bin(const long long[:] starts, const long long[:] ends,
                         const long long[:] edges):
    cdef Py_ssize_t n = edges.shape[0] - 1
    days_arr = array.array("q", bytes(8 * n))
    cdef long long[::1] days = days_arr
    cdef long long lo = edges[0]
    cdef long long hi = edges[n]
    cdef Py_ssize_t k, i
    cdef long long s, e, cs, ce, upper, lower, overlap
    with nogil:
        for k in range(starts.shape[0]):
            s = starts[k]
            e = ends[k]
            cs = s if s > lo else lo
            ce = e if e < hi else hi
            if ce <= cs:
                continue
            i = _find_bin(edges, cs)
            while i < n and edges[i] < ce:
                upper = edges[i + 1]
                lower = edges[i]
                overlap = (ce if ce < upper else upper) - (cs if cs > lower else lower)
                days[i] += overlap
                i += 1
    return list(days_arr)
