# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels: fused loops over typed memoryviews.

Contract mirrors `_kernels_py`. The scatter into the per-item scratch
buffer and the entropy accumulation happen in one pass per answer, with
no intermediate (n_cells x n_answers) array.
"""

from libc.math cimport log

import numpy as np


def cond_entropy(const double[::1] belief, const double[:, ::1] grid,
                 const int[::1] cell_state, const int[::1] cell_item,
                 int n_items):
    """Expected posterior item entropy of one question, log base n_items."""
    cdef Py_ssize_t n_cells = belief.shape[0]
    cdef Py_ssize_t n_ans = grid.shape[1]
    cdef Py_ssize_t a, c, i
    cdef double z, s, x, acc
    if n_items <= 1:
        return 0.0
    scratch_arr = np.zeros(n_items, dtype=np.float64)
    cdef double[::1] scratch = scratch_arr
    acc = 0.0
    for a in range(n_ans):
        for c in range(n_cells):
            scratch[cell_item[c]] += belief[c] * grid[cell_state[c], a]
        z = 0.0
        s = 0.0
        for i in range(n_items):
            x = scratch[i]
            if x > 0.0:
                z += x
                s += x * log(x)
            scratch[i] = 0.0
        if z > 0.0:
            acc += z * log(z) - s
    return acc / log(<double> n_items)
