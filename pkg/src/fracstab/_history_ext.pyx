# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled history-convolution kernel for the predictor-corrector solver.

For step n the fractional memory term is a correlation of the stored
right-hand-side history F[j, i] with a per-component weight table
W[n - j, i].  This dominates the solver runtime (O(N^2) over a run), so it
is the one piece kept in C.
"""

import numpy as np
cimport numpy as cnp


def weighted_history(double[:, ::1] F, double[:, ::1] W, Py_ssize_t n,
                     Py_ssize_t j0, double[::1] out):
    """out[i] = sum_{j=j0..n} W[n-j, i] * F[j, i]."""
    cdef Py_ssize_t ncomp = F.shape[1]
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(ncomp):
        acc = 0.0
        for j in range(j0, n + 1):
            acc += W[n - j, i] * F[j, i]
        out[i] = acc
    return np.asarray(out)
