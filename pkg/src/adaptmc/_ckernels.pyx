# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`adaptmc._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def rescale_accumulate(const cnp.int64_t[::1] idx, const double[::1] vals,
                       Py_ssize_t d, double scale):
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(d, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t j, m = idx.shape[0]
    for j in range(m):
        o[idx[j]] += vals[j]
    if scale != 1.0:
        for j in range(d):
            o[j] *= scale
    return out


def project_residual(const double[:, :] Q, const double[::1] x):
    """Coefficients Q^T x and ||x - Q Q^T x||^2, two classical GS passes."""
    cdef Py_ssize_t m = Q.shape[0], k = Q.shape[1], i, j, p
    cdef cnp.ndarray[double, ndim=1] coef = np.zeros(k, dtype=np.float64)
    cdef double[::1] c = coef
    cdef double[::1] r = np.array(x, dtype=np.float64, copy=True)
    cdef double s, energy = 0.0
    for p in range(2):
        for j in range(k):
            s = 0.0
            for i in range(m):
                s += Q[i, j] * r[i]
            c[j] += s
            for i in range(m):
                r[i] -= s * Q[i, j]
    for i in range(m):
        energy += r[i] * r[i]
    return coef, energy


def orthogonalize(const double[:, :] U, const double[::1] x):
    """Modified Gram-Schmidt of x against the columns of U, one re-pass.

    Returns the unnormalized residual and its norm.
    """
    cdef Py_ssize_t d = U.shape[0], k = U.shape[1], i, j, p
    cdef cnp.ndarray[double, ndim=1] res = np.array(x, dtype=np.float64, copy=True)
    cdef double[::1] q = res
    cdef double s, nrm = 0.0
    for p in range(2):
        for j in range(k):
            s = 0.0
            for i in range(d):
                s += U[i, j] * q[i]
            for i in range(d):
                q[i] -= s * U[i, j]
    for i in range(d):
        nrm += q[i] * q[i]
    return res, sqrt(nrm)


def mark_seen(cnp.uint8_t[::1] seen, const cnp.int64_t[::1] rows):
    cdef Py_ssize_t j, m = rows.shape[0], new = 0
    cdef cnp.int64_t i
    for j in range(m):
        i = rows[j]
        if not seen[i]:
            seen[i] = 1
            new += 1
    return new
