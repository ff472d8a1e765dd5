# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-walk enumeration.

Same contract as :mod:`fklab._kernels_py`; see :func:`fklab.kernels.closed_walk_counts`.
"""
import numpy as np


def closed_walk_counts(const int[:, ::1] nbr, const int[::1] deg,
                       const unsigned char[:, ::1] adj, const unsigned char[::1] occ,
                       int kmax):
    cdef Py_ssize_t n = nbr.shape[0]
    cdef Py_ssize_t start
    cdef int depth, x, y

    counts = np.zeros((kmax + 1, kmax + 1), dtype=np.int64)
    cdef long long[:, ::1] c = counts
    if kmax < 2:
        return counts

    path_arr = np.zeros(kmax, dtype=np.intc)
    slot_arr = np.zeros(kmax, dtype=np.intc)
    empty_arr = np.zeros(kmax, dtype=np.intc)
    cdef int[::1] path = path_arr
    cdef int[::1] slot = slot_arr
    cdef int[::1] empties = empty_arr

    for start in range(n):
        depth = 0
        path[0] = <int>start
        slot[0] = 0
        empties[0] = 1 - occ[start]
        while depth >= 0:
            x = path[depth]
            if depth + 1 < kmax and slot[depth] < deg[x]:
                y = nbr[x, slot[depth]]
                slot[depth] += 1
                depth += 1
                path[depth] = y
                slot[depth] = 0
                empties[depth] = empties[depth - 1] + 1 - occ[y]
                if adj[y, start]:
                    c[depth + 1, empties[depth]] += 1
            else:
                depth -= 1
    return counts
