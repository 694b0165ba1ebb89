# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: pair counting, Theiler-excluded neighbours, RQA line scans."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, threadid
from libc.stdlib cimport labs

cnp.import_array()


def pair_counts(const double[:, ::1] pts, const long[::1] tidx,
                const double[::1] eps2, long theiler, int nthreads=1):
    """Counts of eligible pairs with squared distance < eps2[k].

    eps2 must be ascending. Returns (cumulative counts, eligible pair total).
    """
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1], K = eps2.shape[0]
    cdef Py_ssize_t i, j, c, lo, hi, mid
    cdef int t, nt = max(1, nthreads)
    cdef double s, diff, top = eps2[K - 1]
    hist_np = np.zeros((nt, K), dtype=np.int64)
    elig_np = np.zeros(nt, dtype=np.int64)
    cdef long long[:, ::1] hist = hist_np
    cdef long long[::1] elig = elig_np
    for i in prange(n, nogil=True, num_threads=nt, schedule="dynamic"):
        t = threadid()
        for j in range(i + 1, n):
            if labs(tidx[j] - tidx[i]) <= theiler:
                continue
            elig[t] += 1
            s = 0.0
            for c in range(d):
                diff = pts[i, c] - pts[j, c]
                s = s + diff * diff
            if s >= top:
                continue
            lo = 0
            hi = K - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if s < eps2[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            hist[t, lo] += 1
    counts = np.cumsum(hist_np.sum(axis=0))
    return counts, int(elig_np.sum())


def nearest_neighbors(const double[:, ::1] pts, const long[::1] tidx, long theiler):
    """Index and squared distance of each point's nearest eligible neighbour (-1 if none)."""
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1]
    cdef Py_ssize_t i, j, c, best
    cdef double s, diff, bd
    idx_np = np.full(n, -1, dtype=np.int64)
    dist_np = np.full(n, np.inf)
    cdef long long[::1] idx = idx_np
    cdef double[::1] dist = dist_np
    for i in range(n):
        best = -1
        bd = 1e308
        for j in range(n):
            if labs(tidx[j] - tidx[i]) <= theiler:
                continue
            s = 0.0
            for c in range(d):
                diff = pts[i, c] - pts[j, c]
                s = s + diff * diff
                if s >= bd:
                    break
            if s < bd:
                bd = s
                best = j
        if best >= 0:
            idx[i] = best
            dist[i] = bd
    return idx_np, dist_np


def diagonal_lines(const unsigned char[:, ::1] R):
    """Histogram of maximal diagonal runs, both triangles, identity line excluded."""
    cdef Py_ssize_t T = R.shape[0], k, i, run
    hist_np = np.zeros(T + 1, dtype=np.int64)
    cdef long long[::1] hist = hist_np
    for k in range(1, T):
        run = 0
        for i in range(T - k):
            if R[i, i + k]:
                run += 1
            elif run:
                hist[run] += 1
                run = 0
        if run:
            hist[run] += 1
        run = 0
        for i in range(T - k):
            if R[i + k, i]:
                run += 1
            elif run:
                hist[run] += 1
                run = 0
        if run:
            hist[run] += 1
    return hist_np


def vertical_lines(const unsigned char[:, ::1] R):
    """Histogram of maximal vertical runs over every column."""
    cdef Py_ssize_t T = R.shape[0], i, j, run
    hist_np = np.zeros(T + 1, dtype=np.int64)
    cdef long long[::1] hist = hist_np
    for j in range(T):
        run = 0
        for i in range(T):
            if R[i, j]:
                run += 1
            elif run:
                hist[run] += 1
                run = 0
        if run:
            hist[run] += 1
    return hist_np


def recurrence_times(const unsigned char[:, ::1] R):
    """Histogram of index distances between successive recurrences in each column."""
    cdef Py_ssize_t T = R.shape[0], i, j, last
    hist_np = np.zeros(T + 1, dtype=np.int64)
    cdef long long[::1] hist = hist_np
    for j in range(T):
        last = -1
        for i in range(T):
            if R[i, j]:
                if last >= 0 and i - last > 1:
                    hist[i - last] += 1
                last = i
    return hist_np
