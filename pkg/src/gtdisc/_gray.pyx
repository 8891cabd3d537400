# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gray-code scan for exhaustive boolean discrepancy."""

import numpy as np

from libc.math cimport fabs

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil


def gray_scan(const double[:, ::1] W, long long start, long long stop):
    """Scan Gray-code counters ``start <= i < stop`` and return ``(best, argbest)``.

    Counter ``i`` encodes the sign vector with ``x[0] = +1`` and
    ``x[r] = -1`` iff bit ``r - 1`` of ``i ^ (i >> 1)`` is set. The score is
    ``sum_k |sum_j W[j, k] x[j]|``. The first maximiser wins ties.
    """
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t j, k, r
    cdef double[::1] c = np.zeros(n)
    cdef double[::1] x = np.empty(n)
    cdef unsigned long long g, i
    cdef double best, val, s
    cdef long long best_i = start
    if stop <= start:
        raise ValueError("empty counter range")
    with nogil:
        g = <unsigned long long>start ^ (<unsigned long long>start >> 1)
        x[0] = 1.0
        for j in range(1, n):
            x[j] = -1.0 if (g >> (j - 1)) & 1 else 1.0
        for j in range(n):
            for k in range(n):
                c[k] += W[j, k] * x[j]
        best = 0.0
        for k in range(n):
            best += fabs(c[k])
        for i in range(<unsigned long long>start + 1, <unsigned long long>stop):
            r = __builtin_ctzll(i) + 1
            s = 2.0 * x[r]
            x[r] = -x[r]
            val = 0.0
            for k in range(n):
                c[k] -= s * W[r, k]
                val += fabs(c[k])
            if val > best:
                best = val
                best_i = <long long>i
    return best, best_i
