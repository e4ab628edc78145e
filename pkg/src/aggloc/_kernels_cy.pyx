# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy assignment kernels; semantics match `_kernels_py` exactly."""

import numpy as np


cdef inline bint _worse(double pa, long ja, double pb, long jb) nogil:
    # worse = smaller prior, ties broken against the later-ordered user
    if pa != pb:
        return pa < pb
    return ja > jb


def top_k_fill(const double[:, :, ::1] priors, const long[:, ::1] counts, const long[::1] order,
               unsigned char[:, :, ::1] out):
    """For each (roi, epoch) cell mark the `counts` users with highest prior."""
    cdef Py_ssize_t n_users = priors.shape[0]
    cdef Py_ssize_t n_rois = priors.shape[1]
    cdef Py_ssize_t n_epochs = priors.shape[2]
    cdef Py_ssize_t s, t, j, u, i, child, parent
    cdef long want
    cdef double p, root_p
    # min-heap over (prior, order position); root is the worst kept user
    heap_p_arr = np.empty(n_users, dtype=np.float64)
    heap_j_arr = np.empty(n_users, dtype=np.int64)
    heap_u_arr = np.empty(n_users, dtype=np.int64)
    cdef double[::1] heap_p = heap_p_arr
    cdef long[::1] heap_j = heap_j_arr
    cdef long[::1] heap_u = heap_u_arr
    cdef Py_ssize_t size
    cdef double tmp_p
    cdef long tmp_j, tmp_u

    with nogil:
        for s in range(n_rois):
            for t in range(n_epochs):
                want = counts[s, t]
                if want <= 0:
                    continue
                if want >= n_users:
                    for u in range(n_users):
                        out[u, s, t] = 1
                    continue
                size = 0
                for j in range(n_users):
                    u = order[j]
                    p = priors[u, s, t]
                    if size < want:
                        # push and sift up
                        i = size
                        heap_p[i] = p
                        heap_j[i] = j
                        heap_u[i] = u
                        size += 1
                        while i > 0:
                            parent = (i - 1) >> 1
                            if _worse(heap_p[i], heap_j[i], heap_p[parent], heap_j[parent]):
                                tmp_p = heap_p[i]; heap_p[i] = heap_p[parent]; heap_p[parent] = tmp_p
                                tmp_j = heap_j[i]; heap_j[i] = heap_j[parent]; heap_j[parent] = tmp_j
                                tmp_u = heap_u[i]; heap_u[i] = heap_u[parent]; heap_u[parent] = tmp_u
                                i = parent
                            else:
                                break
                        continue
                    root_p = heap_p[0]
                    # iteration follows `order`, so an equal prior never
                    # displaces an already-kept (earlier) user
                    if p <= root_p:
                        continue
                    # replace root and sift down
                    heap_p[0] = p
                    heap_j[0] = j
                    heap_u[0] = u
                    i = 0
                    while True:
                        child = 2 * i + 1
                        if child >= size:
                            break
                        if child + 1 < size and _worse(
                            heap_p[child + 1], heap_j[child + 1], heap_p[child], heap_j[child]
                        ):
                            child += 1
                        if _worse(heap_p[child], heap_j[child], heap_p[i], heap_j[i]):
                            tmp_p = heap_p[i]; heap_p[i] = heap_p[child]; heap_p[child] = tmp_p
                            tmp_j = heap_j[i]; heap_j[i] = heap_j[child]; heap_j[child] = tmp_j
                            tmp_u = heap_u[i]; heap_u[i] = heap_u[child]; heap_u[child] = tmp_u
                            i = child
                        else:
                            break
                for i in range(size):
                    out[heap_u[i], s, t] = 1


def capacity_fill(const double[:, :, ::1] priors, const long[:, ::1] counts, const long[::1] order,
                  unsigned char[:, :, ::1] out):
    """Assign users in `order` to positive-prior ROIs with spare capacity."""
    cdef Py_ssize_t n_users = priors.shape[0]
    cdef Py_ssize_t n_rois = priors.shape[1]
    cdef Py_ssize_t n_epochs = priors.shape[2]
    cdef Py_ssize_t s, t, j, u
    cdef long column_total, total, unconsumed = 0
    assigned_arr = np.zeros(n_rois, dtype=np.int64)
    cdef long[::1] assigned = assigned_arr

    with nogil:
        for t in range(n_epochs):
            column_total = 0
            for s in range(n_rois):
                column_total += counts[s, t]
                assigned[s] = 0
            if column_total == 0:
                continue
            total = 0
            for j in range(n_users):
                u = order[j]
                for s in range(n_rois):
                    if priors[u, s, t] > 0.0 and assigned[s] < counts[s, t]:
                        out[u, s, t] = 1
                        assigned[s] += 1
                        total += 1
                if total == column_total:
                    break
            unconsumed += column_total - total
    return int(unconsumed)
