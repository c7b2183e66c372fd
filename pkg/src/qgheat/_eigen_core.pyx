# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Householder tridiagonalization and implicit-shift QL.

Mirrors ``_eigen_py`` statement for statement; see that module for the
calling conventions.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot

cnp.import_array()

cdef double _EPS = 2.220446049250313e-16


def tridiagonalize(a, bint vectors=True):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] varr = np.array(a, dtype=np.float64, order="C")
    cdef double[:, ::1] v = varr
    cdef Py_ssize_t n = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] darr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] earr = np.zeros(n)
    cdef double[::1] d = darr
    cdef double[::1] e = earr
    cdef Py_ssize_t i, j, k
    cdef double scale, h, f, g, hh

    for j in range(n):
        d[j] = v[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += fabs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
                v[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                v[j, i] = f
                g = e[j] + v[j, j] * f
                for k in range(j + 1, i):
                    g += v[k, j] * d[k]
                    e[k] += v[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    v[k, j] -= f * e[k] + g * d[k]
                d[j] = v[i - 1, j]
                v[i, j] = 0.0
        d[i] = h

    if not vectors:
        for j in range(n):
            d[j] = v[j, j]
        e[0] = 0.0
        return darr, earr, None

    for i in range(n - 1):
        v[n - 1, i] = v[i, i]
        v[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = v[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += v[k, i + 1] * v[k, j]
                for k in range(i + 1):
                    v[k, j] -= g * d[k]
        for k in range(i + 1):
            v[k, i + 1] = 0.0
    for j in range(n):
        d[j] = v[n - 1, j]
        v[n - 1, j] = 0.0
    v[n - 1, n - 1] = 1.0
    e[0] = 0.0
    return darr, earr, varr


def ql_implicit(d_in, e_in, zt_in=None, int max_iter=60):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] darr = np.array(d_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ein = np.asarray(e_in, dtype=np.float64)
    cdef double[::1] d = darr
    cdef Py_ssize_t n = d.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] earr = np.zeros(n)
    cdef double[::1] e = earr
    cdef double[:, ::1] z
    cdef bint have_z = zt_in is not None
    cdef Py_ssize_t i, k, l, m, ncol = 0
    cdef int it
    cdef double f = 0.0, tst1 = 0.0, g, p, r, dl1, h, c, c2, c3, el1, s, s2, zk

    if have_z:
        z = zt_in
        ncol = z.shape[1]
    for i in range(n - 1):
        e[i] = ein[i + 1]
    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n - 1 and fabs(e[m]) > _EPS * tst1:
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    raise RuntimeError(
                        f"QL iteration did not converge for eigenvalue {l} "
                        f"(d={d[l]!r}, e={e[l]!r}) after {max_iter} sweeps"
                    )
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f = f + h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    if have_z:
                        for k in range(ncol):
                            zk = z[i + 1, k]
                            z[i + 1, k] = s * z[i, k] + c * zk
                            z[i, k] = c * z[i, k] - s * zk
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if fabs(e[l]) <= _EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return darr, zt_in
