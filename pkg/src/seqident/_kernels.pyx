# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled MAR fixed-point iteration. See ``_kernels_py`` for the reference version."""

from libc.math cimport fabs
from libc.stdlib cimport free, malloc


def mar_em(const double[:, ::1] g, const Py_ssize_t[:, ::1] mat, double[:, ::1] q,
           double tol, long max_iter):
    cdef Py_ssize_t n_ctx = g.shape[0], n_mat = g.shape[1]
    cdef Py_ssize_t n_pat = mat.shape[0], n_full = mat.shape[1]
    cdef Py_ssize_t b, m, x, s
    cdef long it = 0, most = 0
    cdef double acc, d, delta = 0.0, worst = 0.0
    cdef double *qobs = <double *> malloc(n_mat * sizeof(double))
    cdef double *nxt = <double *> malloc(n_full * sizeof(double))
    if qobs == NULL or nxt == NULL:
        free(qobs)
        free(nxt)
        raise MemoryError()
    try:
        with nogil:
            for b in range(n_ctx):
                it = 0
                while it < max_iter:
                    it += 1
                    for s in range(n_mat):
                        qobs[s] = 0.0
                    for m in range(n_pat):
                        for x in range(n_full):
                            qobs[mat[m, x]] += q[b, x]
                    delta = 0.0
                    for x in range(n_full):
                        acc = 0.0
                        for m in range(n_pat):
                            s = mat[m, x]
                            if qobs[s] > 0.0:
                                acc = acc + g[b, s] / qobs[s]
                        nxt[x] = q[b, x] * acc
                        d = fabs(nxt[x] - q[b, x])
                        if d > delta:
                            delta = d
                    for x in range(n_full):
                        q[b, x] = nxt[x]
                    if delta <= tol:
                        break
                if it > most:
                    most = it
                if delta > worst:
                    worst = delta
    finally:
        free(qobs)
        free(nxt)
    return most, worst
