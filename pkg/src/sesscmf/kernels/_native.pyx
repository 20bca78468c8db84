# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ALS row-solve kernels; see kernels.pure for the shared contract."""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_lapack cimport dposv

BACKEND_NAME = "native"

ctypedef cnp.int64_t idx_t


cdef inline void _accumulate(
    double[::1] A,
    double[::1] b,
    const double[:, ::1] factors,
    const idx_t[::1] indices,
    const double[::1] data,
    Py_ssize_t start,
    Py_ssize_t end,
    double weight,
    Py_ssize_t k,
) noexcept:
    cdef Py_ssize_t p, a, c
    cdef idx_t col
    cdef double fa, wv
    for p in range(start, end):
        col = indices[p]
        wv = weight * data[p]
        for a in range(k):
            fa = factors[col, a]
            b[a] += wv * fa
            for c in range(k):
                A[a * k + c] += weight * fa * factors[col, c]


cdef int _solve_row(double[::1] A, double[::1] b, Py_ssize_t k) noexcept:
    cdef int n = <int> k
    cdef int nrhs = 1
    cdef int info = 0
    # A is symmetric, so the C/Fortran layout mismatch is harmless.
    dposv("L", &n, &nrhs, &A[0], &n, &b[0], &n, &info)
    return info


def solve_rows_joint(
    double[:, ::1] out,
    double[:, ::1] base,
    double[:, ::1] f1,
    idx_t[::1] indptr1,
    idx_t[::1] indices1,
    double[::1] data1,
    double w1,
    double[:, ::1] f2,
    idx_t[::1] indptr2,
    idx_t[::1] indices2,
    double[::1] data2,
    double w2,
    bint nonneg,
):
    cdef Py_ssize_t nrows = out.shape[0]
    cdef Py_ssize_t k = out.shape[1]
    cdef double[::1] A = np.empty(k * k)
    cdef double[::1] b = np.empty(k)
    cdef double[:, ::1] base_v = base
    cdef Py_ssize_t r, a, c
    cdef bint has_rhs
    cdef int info
    for r in range(nrows):
        for a in range(k):
            b[a] = 0.0
            for c in range(k):
                A[a * k + c] = base_v[a, c]
        _accumulate(A, b, f1, indices1, data1, indptr1[r], indptr1[r + 1], w1, k)
        _accumulate(A, b, f2, indices2, data2, indptr2[r], indptr2[r + 1], w2, k)
        has_rhs = False
        for a in range(k):
            if b[a] != 0.0:
                has_rhs = True
                break
        if not has_rhs:
            for a in range(k):
                out[r, a] = 0.0
            continue
        info = _solve_row(A, b, k)
        if info != 0:
            raise np.linalg.LinAlgError(
                f"singular normal-equation system for row {r}"
            )
        for a in range(k):
            if nonneg and b[a] < 0.0:
                out[r, a] = 0.0
            else:
                out[r, a] = b[a]


def solve_rows_wmf(
    double[:, ::1] out,
    double[:, ::1] other,
    double[:, ::1] gram,
    idx_t[::1] indptr,
    idx_t[::1] indices,
    double[::1] data,
    double alpha,
    bint nonneg,
):
    cdef Py_ssize_t nrows = out.shape[0]
    cdef Py_ssize_t k = out.shape[1]
    cdef double[::1] A = np.empty(k * k)
    cdef double[::1] b = np.empty(k)
    cdef Py_ssize_t r, p, a, c
    cdef idx_t col
    cdef double fa, conf
    cdef int info
    for r in range(nrows):
        if indptr[r] == indptr[r + 1]:
            for a in range(k):
                out[r, a] = 0.0
            continue
        for a in range(k):
            b[a] = 0.0
            for c in range(k):
                A[a * k + c] = gram[a, c]
        for p in range(indptr[r], indptr[r + 1]):
            col = indices[p]
            conf = alpha * data[p]
            for a in range(k):
                fa = other[col, a]
                b[a] += (1.0 + conf) * fa
                for c in range(k):
                    A[a * k + c] += conf * fa * other[col, c]
        info = _solve_row(A, b, k)
        if info != 0:
            raise np.linalg.LinAlgError(
                f"singular normal-equation system for row {r}"
            )
        for a in range(k):
            if nonneg and b[a] < 0.0:
                out[r, a] = 0.0
            else:
                out[r, a] = b[a]
