# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Signatures mirror :mod:`dyadic_factor._pykernels`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def square_function_l1(double[:, ::1] coef_sq, int64_t[::1] x0, int64_t[::1] x1,
                       int64_t[::1] y0, int64_t[::1] y1, int side):
    """Integral of sqrt(sum_R c_R 1_R) over the unit square, per row of ``coef_sq``."""
    cdef Py_ssize_t nb = coef_sq.shape[0], dim = coef_sq.shape[1]
    cdef Py_ssize_t b, r, ix, iy, c, ncell = <Py_ssize_t>side * side
    cdef double v, s, comp, term, tmp
    out = np.empty(nb, dtype=np.float64)
    cdef double[::1] res = out
    cdef double *grid = <double *>malloc(ncell * sizeof(double))
    if grid == NULL:
        raise MemoryError()
    try:
        with nogil:
            for b in range(nb):
                memset(grid, 0, ncell * sizeof(double))
                for r in range(dim):
                    v = coef_sq[b, r]
                    if v == 0.0:
                        continue
                    for ix in range(x0[r], x1[r]):
                        for iy in range(y0[r], y1[r]):
                            grid[ix * side + iy] += v
                # Kahan summation of the cell contributions
                s = 0.0
                comp = 0.0
                for c in range(ncell):
                    term = sqrt(grid[c]) - comp
                    tmp = s + term
                    comp = (tmp - s) - term
                    s = tmp
                res[b] = s / ncell
    finally:
        free(grid)
    return out


cdef struct Best:
    double ratio
    double num
    long long cells
    unsigned long long subset


cdef void _dfs(const uint64_t[:, ::1] masks, const double[::1] weights,
               Py_ssize_t start, uint64_t *stack, Py_ssize_t depth,
               unsigned long long chosen, Best *best) noexcept nogil:
    cdef Py_ssize_t s = masks.shape[0], w = masks.shape[1]
    cdef Py_ssize_t i, r, k
    cdef uint64_t *cur
    cdef uint64_t *nxt
    cdef long long cells
    cdef double num, ratio
    cdef bint inside
    cur = stack + depth * w
    nxt = stack + (depth + 1) * w
    for i in range(start, s):
        cells = 0
        for k in range(w):
            nxt[k] = cur[k] | masks[i, k]
            cells += __builtin_popcountll(nxt[k])
        num = 0.0
        for r in range(s):
            inside = True
            for k in range(w):
                if masks[r, k] & ~nxt[k]:
                    inside = False
                    break
            if inside:
                num += weights[r]
        ratio = num / cells
        if ratio > best.ratio:
            best.ratio = ratio
            best.num = num
            best.cells = cells
            best.subset = chosen | (1ULL << i)
        _dfs(masks, weights, i + 1, stack, depth + 1, chosen | (1ULL << i), best)


def bmo_union_max(const uint64_t[:, ::1] masks, const double[::1] weights):
    """Maximize sum_{R subset U} w_R / cells(U) over unions U of member masks.

    Returns ``(num, cells, subset_bits)`` of the best union.
    """
    cdef Py_ssize_t s = masks.shape[0], w = masks.shape[1]
    cdef Best best
    best.ratio = -1.0
    best.num = 0.0
    best.cells = 1
    best.subset = 0
    if s == 0:
        return 0.0, 1, 0
    if s > 62:
        raise ValueError("too many support rectangles")
    cdef uint64_t *stack = <uint64_t *>malloc((s + 1) * w * sizeof(uint64_t))
    if stack == NULL:
        raise MemoryError()
    try:
        memset(stack, 0, (s + 1) * w * sizeof(uint64_t))
        with nogil:
            _dfs(masks, weights, 0, stack, 0, 0, &best)
    finally:
        free(stack)
    return best.num, best.cells, best.subset
