# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled squared-exponential covariance builders.

These are the hot inner loops of candidate scoring: every greedy step of
the exploration routine rebuilds cross-covariances between the history and
thousands of candidates. The loops run in C with no temporaries; see
mfbo._covnumpy for the equivalent (and slower) vectorized fallback.
"""

from libc.math cimport exp

import numpy as np


def se_cross(const double[:, ::1] xa, const double[:, ::1] xb,
             const double[::1] inv_ls_sq, double signal_var):
    """Cross-covariance matrix of a squared-exponential kernel.

    inv_ls_sq holds 1/lengthscale**2 per input dimension.
    """
    cdef Py_ssize_t na = xa.shape[0]
    cdef Py_ssize_t nb = xb.shape[0]
    cdef Py_ssize_t d = xa.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for k in range(d):
                t = xa[i, k] - xb[j, k]
                s += t * t * inv_ls_sq[k]
            o[i, j] = signal_var * exp(-0.5 * s)
    return out


def se_sym(const double[:, ::1] xa, const double[::1] inv_ls_sq, double signal_var):
    """Symmetric covariance matrix of a squared-exponential kernel.

    Fills the lower triangle and mirrors it, so the result is exactly
    symmetric (bitwise), which keeps downstream factorizations honest.
    """
    cdef Py_ssize_t n = xa.shape[0]
    cdef Py_ssize_t d = xa.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t
    out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(n):
        o[i, i] = signal_var
        for j in range(i):
            s = 0.0
            for k in range(d):
                t = xa[i, k] - xa[j, k]
                s += t * t * inv_ls_sq[k]
            s = signal_var * exp(-0.5 * s)
            o[i, j] = s
            o[j, i] = s
    return out
