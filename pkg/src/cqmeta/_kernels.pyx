# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``.

Hermitian eigenproblems go to LAPACK ``zheevd`` and matrix products to
BLAS ``zgemm``, both through scipy's Cython bindings, so nothing crosses
back into Python inside the loops.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from scipy.linalg.cython_blas cimport zgemm
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND = "cython"
cdef double TIE_TOL = 1e-12

ctypedef double complex cplx


cdef class _Workspace:
    """LAPACK zheevd work arrays for one matrix size."""
    cdef cplx[::1] work
    cdef double[::1] rwork
    cdef int[::1] iwork
    cdef int lwork, lrwork, liwork

    def __init__(self, int d):
        self.lwork = 2 * d + d * d
        self.lrwork = 1 + 5 * d + 2 * d * d
        self.liwork = 3 + 5 * d
        self.work = np.empty(self.lwork, dtype=complex)
        self.rwork = np.empty(self.lrwork)
        self.iwork = np.empty(self.liwork, dtype=np.intc)


cdef int _eigh(int d, cplx[::1] a, double[::1] w, _Workspace ws) except -1:
    # a holds a column-major Hermitian matrix; on exit its columns are eigenvectors
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0
    cdef int n = d
    zheevd(&jobz, &uplo, &n, &a[0], &n, &w[0], &ws.work[0], &ws.lwork,
           &ws.rwork[0], &ws.lrwork, &ws.iwork[0], &ws.liwork, &info)
    if info != 0:
        raise np.linalg.LinAlgError(f"zheevd failed with info={info}")
    return 0


cdef void _forms(int d, cplx[:, ::1] r, cplx[::1] a, cplx[::1] rv, double[::1] out,
                 Py_ssize_t pos):
    # out[pos + k] = Re <v_k| r |v_k> for the column-major eigenvectors in a.
    # A row-major Hermitian r read column-major is conj(r), so op = 'T' gives r.
    cdef char ta = b'T'
    cdef char tb = b'N'
    cdef int n = d
    cdef cplx one = 1.0
    cdef cplx zero = 0.0
    cdef int i, k
    cdef cplx acc
    zgemm(&ta, &tb, &n, &n, &n, &one, &r[0, 0], &n, &a[0], &n, &zero, &rv[0], &n)
    for k in range(d):
        acc = 0
        for i in range(d):
            acc = acc + a[i + k * d].conjugate() * rv[i + k * d]
        out[pos + k] = acc.real


def threshold_stats(list stacks0, list stacks1, double t, double rel_tol, double abs_tol):
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t s, b, nb
    cdef int d, i, j, k
    cdef _Workspace ws
    for s in range(len(stacks0)):
        total += stacks0[s].shape[0] * stacks0[s].shape[1]
    cdef double[::1] w_all = np.empty(total)
    cdef double[::1] q0_all = np.empty(total)
    cdef double[::1] q1_all = np.empty(total)
    cdef cplx[:, :, ::1] r0
    cdef cplx[:, :, ::1] r1
    cdef cplx[::1] a, rv
    cdef double[::1] w
    cdef Py_ssize_t pos = 0
    for s in range(len(stacks0)):
        r0 = stacks0[s]
        r1 = stacks1[s]
        nb = r0.shape[0]
        d = <int>r0.shape[1]
        a = np.empty(d * d, dtype=complex)
        rv = np.empty(d * d, dtype=complex)
        w = np.empty(d)
        ws = _Workspace(d)
        for b in range(nb):
            for j in range(d):
                for i in range(d):
                    a[i + j * d] = r0[b, i, j] - t * r1[b, i, j]
            _eigh(d, a, w, ws)
            _forms(d, r0[b], a, rv, q0_all, pos)
            _forms(d, r1[b], a, rv, q1_all, pos)
            for k in range(d):
                w_all[pos + k] = w[k]
            pos += d
    cdef double scale = 0.0
    for i in range(total):
        if fabs(w_all[i]) > scale:
            scale = fabs(w_all[i])
    cdef double tol = max(rel_tol * scale, abs_tol)
    cdef double p0 = 0, p1 = 0, n0 = 0, n1 = 0, plus = 0
    for i in range(total):
        if w_all[i] > 0:
            plus += w_all[i]
        if w_all[i] > tol:
            p0 += q0_all[i]
            p1 += q1_all[i]
        elif fabs(w_all[i]) <= tol:
            n0 += q0_all[i]
            n1 += q1_all[i]
    return np.array([p0, p1, n0, n1, plus])


cdef void _matmul(int d, cplx[:, ::1] x, cplx[:, ::1] y, cplx[:, ::1] out) noexcept:
    # row-major out = x y is column-major out^T = y^T x^T
    cdef char tn = b'N'
    cdef int n = d
    cdef cplx one = 1.0
    cdef cplx zero = 0.0
    zgemm(&tn, &tn, &n, &n, &n, &one, &y[0, 0], &n, &x[0, 0], &n, &zero, &out[0, 0], &n)


def fixed_point(R_in, Pi_in, int n_iter, double rel_tol, double abs_tol):
    cdef cplx[:, :, ::1] R = np.ascontiguousarray(R_in, dtype=complex)
    Pi_arr = np.array(Pi_in, dtype=complex, order="C")
    cdef cplx[:, :, ::1] Pi = Pi_arr
    cdef int M = <int>R.shape[0]
    cdef int d = <int>R.shape[1]
    cdef int it, m, i, j, k, best
    cdef _Workspace ws = _Workspace(d)
    cdef cplx[:, ::1] S = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] Linv = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] t1 = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] t2 = np.empty((d, d), dtype=complex)
    cdef cplx[:, ::1] deficit = np.empty((d, d), dtype=complex)
    cdef cplx[:, :, ::1] RP = np.empty((M, d, d), dtype=complex)
    cdef cplx[::1] a = np.empty(d * d, dtype=complex)
    cdef double[::1] w = np.empty(d)
    cdef double[::1] scores = np.empty(M)
    cdef double scale, tol, score, best_score, inv
    cdef cplx acc, h
    for it in range(n_iter):
        # S = sum_m R_m Pi_m R_m
        for i in range(d):
            for j in range(d):
                S[i, j] = 0
        for m in range(M):
            _matmul(d, R[m], Pi[m], RP[m])
            _matmul(d, RP[m], R[m], t1)
            for i in range(d):
                for j in range(d):
                    S[i, j] = S[i, j] + t1[i, j]
        for j in range(d):
            for i in range(d):
                a[i + j * d] = 0.5 * (S[i, j] + S[j, i].conjugate())
        _eigh(d, a, w, ws)
        scale = 0.0
        for k in range(d):
            if fabs(w[k]) > scale:
                scale = fabs(w[k])
        tol = max(rel_tol * scale, abs_tol)
        for i in range(d):
            for j in range(d):
                acc = 0
                for k in range(d):
                    if w[k] > tol:
                        acc = acc + a[i + k * d] * a[j + k * d].conjugate() / sqrt(w[k])
                Linv[i, j] = acc
        # Pi_m <- Linv (R_m Pi_m R_m) Linv
        for i in range(d):
            for j in range(d):
                deficit[i, j] = 1.0 if i == j else 0.0
        for m in range(M):
            _matmul(d, RP[m], R[m], t1)
            _matmul(d, Linv, t1, t2)
            _matmul(d, t2, Linv, t1)
            for i in range(d):
                for j in range(i, d):
                    h = 0.5 * (t1[i, j] + t1[j, i].conjugate())
                    Pi[m, i, j] = h
                    Pi[m, j, i] = h.conjugate()
            for i in range(d):
                for j in range(d):
                    deficit[i, j] = deficit[i, j] - Pi[m, i, j]
        for m in range(M):
            score = 0.0
            for i in range(d):
                for j in range(d):
                    score += (R[m, i, j] * deficit[j, i]).real
            scores[m] = score
            if m == 0 or score > best_score:
                best_score = score
        # near-ties go to the lowest index so rounding cannot pick the winner
        best = 0
        while scores[best] < best_score - TIE_TOL:
            best += 1
        for i in range(d):
            for j in range(d):
                Pi[best, i, j] = Pi[best, i, j] + deficit[i, j]
    return Pi_arr
