# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of fallback.subset_utilities.

Per subset: copy the Gram block into a Fortran-order scratch, get its
eigenvalue spread with zheev for the conditioning gate, then invert in place
with zpotrf/zpotri; only the inverse diagonal is read.
"""

import numpy as np

from libc.math cimport INFINITY, log2, pow
from scipy.linalg.cython_lapack cimport zheev, zpotrf, zpotri

backend_name = "native"


def subset_utilities(gram, gains, weights, subsets, double rate_cap,
                     double sinr_scale=1.0, double cross_power=1.0,
                     double cond_limit=1e8):
    """Weighted sum rate of each subset row; -inf when ill-conditioned."""
    cdef double complex[:, ::1] g = np.ascontiguousarray(gram, dtype=np.complex128)
    cdef double[::1] lam = np.ascontiguousarray(gains, dtype=np.float64)
    cdef double[::1] om = np.ascontiguousarray(weights, dtype=np.float64)
    cdef long[:, ::1] idx = np.ascontiguousarray(subsets, dtype=np.int64)

    cdef Py_ssize_t n_rows = idx.shape[0]
    cdef int s = <int> idx.shape[1]
    out_arr = np.full(n_rows, -INFINITY, dtype=np.float64)
    if n_rows == 0 or s == 0:
        return out_arr

    cdef double[::1] out = out_arr
    cdef double complex[::1] a = np.empty(s * s, dtype=np.complex128)
    cdef double complex[::1] e = np.empty(s * s, dtype=np.complex128)
    cdef int lwork = 4 * s + 2
    cdef double complex[::1] work = np.empty(lwork, dtype=np.complex128)
    cdef double[::1] rwork = np.empty(3 * s + 1, dtype=np.float64)
    cdef double[::1] w = np.empty(s, dtype=np.float64)

    cdef char jobz = b'N'
    cdef char uplo = b'U'
    cdef int n = s, lda = s, info = 0
    cdef Py_ssize_t b
    cdef int i, j, k
    cdef long row_i, row_k
    cdef double util, diag, cross, sinr, rate

    with nogil:
        for b in range(n_rows):
            for j in range(s):
                for i in range(s):
                    row_i = idx[b, i]
                    a[i + j * s] = g[row_i, idx[b, j]]
            for k in range(s * s):
                e[k] = a[k]
            zheev(&jobz, &uplo, &n, &e[0], &lda, &w[0], &work[0], &lwork,
                  &rwork[0], &info)
            if info != 0 or w[0] <= 0.0 or w[s - 1] > cond_limit * w[0]:
                continue
            zpotrf(&uplo, &n, &a[0], &lda, &info)
            if info != 0:
                continue
            zpotri(&uplo, &n, &a[0], &lda, &info)
            if info != 0:
                continue
            util = 0.0
            for k in range(s):
                diag = a[k + k * s].real
                if diag <= 0.0:
                    util = -INFINITY
                    break
                if cross_power == 1.0:
                    cross = 1.0 / diag
                else:
                    cross = pow(1.0 / diag, cross_power)
                row_k = idx[b, k]
                sinr = sinr_scale * lam[row_k] * cross
                rate = log2(1.0 + sinr)
                if rate > rate_cap:
                    rate = rate_cap
                util += om[row_k] * rate
            out[b] = util

    return out_arr
