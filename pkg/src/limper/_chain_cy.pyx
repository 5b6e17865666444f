# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transfer-chain kernels; semantics identical to _chain_py."""

from libc.math cimport frexp, ldexp, fabs

import numpy as np

BACKEND = "cython"


def chain_scalar(double E, double[::1] values, double a, double b,
                 double c, double d, long long ex):
    cdef Py_ssize_t i, n = values.shape[0]
    cdef double t, na, nb, m, s
    cdef int e
    with nogil:
        for i in range(n):
            t = E - values[i]
            na = t * a - c
            nb = t * b - d
            c = a
            d = b
            a = na
            b = nb
            m = fabs(a)
            if fabs(b) > m: m = fabs(b)
            if fabs(c) > m: m = fabs(c)
            if fabs(d) > m: m = fabs(d)
            frexp(m, &e)
            if e != 0:
                s = ldexp(1.0, -e)
                a *= s
                b *= s
                c *= s
                d *= s
                ex += e
    return a, b, c, d, ex


def chain_batch(object E_obj, object values_obj, object a_obj, object b_obj,
                object c_obj, object d_obj, object ex_obj):
    cdef double[::1] E = E_obj
    cdef double[::1] values = np.ascontiguousarray(values_obj, dtype=np.float64)
    cdef double[::1] a = a_obj
    cdef double[::1] b = b_obj
    cdef double[::1] c = c_obj
    cdef double[::1] d = d_obj
    cdef long long[::1] ex = ex_obj
    cdef Py_ssize_t i, k, n = values.shape[0], ne = E.shape[0]
    cdef double t, na, nb, m, s, v
    cdef int e
    with nogil:
        for i in range(n):
            v = values[i]
            for k in range(ne):
                t = E[k] - v
                na = t * a[k] - c[k]
                nb = t * b[k] - d[k]
                c[k] = a[k]
                d[k] = b[k]
                a[k] = na
                b[k] = nb
                m = fabs(a[k])
                if fabs(b[k]) > m: m = fabs(b[k])
                if fabs(c[k]) > m: m = fabs(c[k])
                if fabs(d[k]) > m: m = fabs(d[k])
                frexp(m, &e)
                if e != 0:
                    s = ldexp(1.0, -e)
                    a[k] *= s
                    b[k] *= s
                    c[k] *= s
                    d[k] *= s
                    ex[k] += e
    return None
