# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np

from libc.math cimport INFINITY

cdef double SINGULAR_RTOL = 1e-12


def poly_quad_form(S, xs):
    cdef double[:, ::1] s = np.ascontiguousarray(S, dtype=np.float64)
    cdef double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef Py_ssize_t p = s.shape[0]
    cdef Py_ssize_t k = x.shape[0]
    out = np.empty(k, dtype=np.float64)
    f_buf = np.empty(p, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] f = f_buf
    cdef Py_ssize_t i, a, b
    cdef double xi, acc, row
    for i in range(k):
        xi = x[i]
        f[0] = 1.0
        for a in range(1, p):
            f[a] = f[a - 1] * xi
        acc = 0.0
        for a in range(p):
            row = 0.0
            for b in range(p):
                row += s[a, b] * f[b]
            acc += f[a] * row
        o[i] = acc
    return out


def line_two_point_g(double x0, double x1, double lo, double hi, delta_inv, long n, ws):
    cdef double[:, ::1] di = np.ascontiguousarray(delta_inv, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(ws, dtype=np.float64)
    cdef Py_ssize_t k = w.shape[0]
    out = np.empty(k, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef double wi, m01, m11, det, tr, a00, a01, a11, adet
    cdef double s00, s01, s11, plo, phi
    cdef double nm1 = <double>(n - 1)
    a00 = 1.0 + di[0, 0]
    for i in range(k):
        wi = w[i]
        m01 = (1.0 - wi) * x0 + wi * x1
        m11 = (1.0 - wi) * x0 * x0 + wi * x1 * x1
        det = m11 - m01 * m01
        tr = 1.0 + m11
        if det <= SINGULAR_RTOL * tr * tr:
            o[i] = INFINITY
            continue
        a01 = m01 + di[0, 1]
        a11 = m11 + di[1, 1]
        adet = a00 * a11 - a01 * a01
        s00 = m11 / det + nm1 * a11 / adet
        s01 = -m01 / det - nm1 * a01 / adet
        s11 = 1.0 / det + nm1 * a00 / adet
        plo = s00 + 2.0 * s01 * lo + s11 * lo * lo
        phi = s00 + 2.0 * s01 * hi + s11 * hi * hi
        o[i] = plo if plo > phi else phi
    return out
