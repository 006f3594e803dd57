# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _kernels_py.py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, log, fabs, hypot

cnp.import_array()


def hermite_eval(int n, x):
    cdef cnp.ndarray[double, ndim=1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xs)
    cdef Py_ssize_t i, npts = xs.shape[0]
    cdef int k
    cdef double h0, h1, h2, xv
    with nogil:
        for i in range(npts):
            xv = xs[i]
            h0 = 1.0
            if n == 0:
                out[i] = 1.0
                continue
            h1 = 2.0 * xv
            for k in range(1, n):
                h2 = 2.0 * xv * h1 - 2.0 * k * h0
                h0 = h1
                h1 = h2
            out[i] = h1
    return out.reshape(np.shape(x))


def sech_envelope(double amp, phase, sigma, weight):
    shape = np.broadcast(phase, sigma, weight).shape
    cdef cnp.ndarray[double, ndim=1] ph = np.ascontiguousarray(
        np.broadcast_to(phase, shape), dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] sg = np.ascontiguousarray(
        np.broadcast_to(sigma, shape), dtype=np.float64).ravel()
    cdef cnp.ndarray[double complex, ndim=1] wt = np.ascontiguousarray(
        np.broadcast_to(weight, shape), dtype=np.complex128).ravel()
    cdef cnp.ndarray[double complex, ndim=1] out = np.empty(ph.shape[0], dtype=np.complex128)
    cdef Py_ssize_t i, npts = ph.shape[0]
    cdef double r, y, e, s, wr, wi, c, sn
    with nogil:
        for i in range(npts):
            wr = wt[i].real
            wi = wt[i].imag
            r = hypot(wr, wi)
            if r == 0.0:
                out[i] = 0.0
                continue
            y = fabs(sg[i] - log(r))
            e = exp(-y)
            s = amp * 2.0 * e / (1.0 + e * e)
            wr = wr / r
            wi = wi / r
            c = cos(ph[i])
            sn = sin(ph[i])
            out[i].real = s * (c * wr - sn * wi)
            out[i].imag = s * (c * wi + sn * wr)
    return out.reshape(shape)


def chirp_quadrature_1d(x, double[::1] y, double[::1] w, double complex[::1] phi,
                        double alpha, double beta):
    cdef double[::1] xs = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t o, i, nout = xs.shape[0], nn = y.shape[0]
    cdef cnp.ndarray[double complex, ndim=1] out = np.empty(nout, dtype=np.complex128)
    cdef double[::1] fr = np.empty(nn), fi = np.empty(nn)
    cdef double xo, th, c, s, ar, ai
    for i in range(nn):
        fr[i] = w[i] * phi[i].real
        fi[i] = w[i] * phi[i].imag
    with nogil:
        for o in range(nout):
            xo = xs[o]
            ar = 0.0
            ai = 0.0
            for i in range(nn):
                th = alpha * (xo * xo + y[i] * y[i]) - beta * xo * y[i]
                c = cos(th)
                s = sin(th)
                ar = ar + c * fr[i] - s * fi[i]
                ai = ai + c * fi[i] + s * fr[i]
            out[o] = ar + 1j * ai
    return out


def chirp_quadrature_2d(x2, x3, double[::1] y2, double[::1] y3,
                        double[::1] w2, double[::1] w3, phi,
                        double alpha2, double beta2, double alpha3, double beta3):
    # chirp factors in C, the (nout, n2) x (n2, n3) contraction through BLAS
    cdef double[::1] xs2 = np.ascontiguousarray(x2, dtype=np.float64).ravel()
    cdef double[::1] xs3 = np.ascontiguousarray(x3, dtype=np.float64).ravel()
    cdef Py_ssize_t o, i, j, nout = xs2.shape[0], n2 = y2.shape[0], n3 = y3.shape[0]
    cdef cnp.ndarray[double complex, ndim=2] a = np.empty((nout, n2), dtype=np.complex128)
    cdef cnp.ndarray[double complex, ndim=2] b = np.empty((nout, n3), dtype=np.complex128)
    cdef double complex[:, ::1] av = a, bv = b
    cdef double xa, xb, th
    with nogil:
        for o in range(nout):
            xa = xs2[o]
            xb = xs3[o]
            for i in range(n2):
                th = alpha2 * (xa * xa + y2[i] * y2[i]) - beta2 * xa * y2[i]
                av[o, i] = cos(th) * w2[i] + 1j * (sin(th) * w2[i])
            for j in range(n3):
                th = alpha3 * (xb * xb + y3[j] * y3[j]) - beta3 * xb * y3[j]
                bv[o, j] = cos(th) * w3[j] + 1j * (sin(th) * w3[j])
    return np.einsum("oj,oj->o", a @ np.asarray(phi, dtype=np.complex128), b)
