# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels for the log-domain GP barrier solver.

These are the hot inner loop of every GP solve: value / gradient / Hessian
of the barrier function over small dense exponent matrices. Interface
mirrors pawsr._gpcore_py; pawsr.kernels selects between the two at import.
"""

from libc.math cimport exp, log

import numpy as np

BACKEND = "cython"


cdef double _block_value(const double[:, ::1] A, const double[::1] b,
                         const double[::1] z,
                         Py_ssize_t r0, Py_ssize_t r1) noexcept nogil:
    # streaming log-sum-exp of A[r0:r1] @ z + b[r0:r1]
    cdef Py_ssize_t n = z.shape[0]
    cdef double mx = 0.0, s = 0.0, u
    cdef Py_ssize_t ti, j
    for ti in range(r0, r1):
        u = b[ti]
        for j in range(n):
            u += A[ti, j] * z[j]
        if ti == r0:
            mx = u
            s = 1.0
        elif u <= mx:
            s += exp(u - mx)
        else:
            s = s * exp(mx - u) + 1.0
            mx = u
    return mx + log(s)


def barrier_value(double t, const double[:, ::1] A0, const double[::1] b0,
                  const double[:, ::1] Ac, const double[::1] bc,
                  const long long[::1] starts, const double[::1] logb,
                  const double[::1] z):
    """phi_t(z) = t*lse0(z) - sum_i log(logb_i - lse_i(z)); (+inf, False) if
    any constraint block reaches its bound."""
    cdef double phi = t * _block_value(A0, b0, z, 0, A0.shape[0])
    cdef Py_ssize_t m = logb.shape[0]
    cdef Py_ssize_t i
    cdef double gi
    for i in range(m):
        gi = _block_value(Ac, bc, z, starts[i], starts[i + 1]) - logb[i]
        if gi >= 0.0:
            return float("inf"), False
        phi -= log(-gi)
    return phi, True


cdef double _block_full(const double[:, ::1] A, const double[::1] b,
                        const double[::1] z, Py_ssize_t r0, Py_ssize_t r1,
                        double[::1] work, double[::1] gbuf,
                        double[:, ::1] hbuf) noexcept nogil:
    # value, softmax gradient (gbuf) and curvature sum p a a^T - g g^T (hbuf)
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t T = r1 - r0
    cdef double mx = 0.0, s = 0.0, u, p, aj
    cdef Py_ssize_t ti, j, k
    for ti in range(T):
        u = b[r0 + ti]
        for j in range(n):
            u += A[r0 + ti, j] * z[j]
        work[ti] = u
        if ti == 0 or u > mx:
            mx = u
    for ti in range(T):
        work[ti] = exp(work[ti] - mx)
        s += work[ti]
    for j in range(n):
        gbuf[j] = 0.0
        for k in range(n):
            hbuf[j, k] = 0.0
    for ti in range(T):
        p = work[ti] / s
        work[ti] = p
        for j in range(n):
            gbuf[j] += p * A[r0 + ti, j]
    for ti in range(T):
        p = work[ti]
        for j in range(n):
            aj = p * A[r0 + ti, j]
            for k in range(j, n):
                hbuf[j, k] += aj * A[r0 + ti, k]
    for j in range(n):
        for k in range(j, n):
            hbuf[j, k] -= gbuf[j] * gbuf[k]
            hbuf[k, j] = hbuf[j, k]
    return mx + log(s)


def barrier_full(double t, const double[:, ::1] A0, const double[::1] b0,
                 const double[:, ::1] Ac, const double[::1] bc,
                 const long long[::1] starts, const double[::1] logb,
                 const double[::1] z, double[::1] grad, double[:, ::1] hess,
                 double[::1] work, double[::1] gbuf, double[:, ::1] hbuf):
    """Like barrier_value but also fills grad and hess in place. work must
    hold max block term count, gbuf n entries, hbuf n*n."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t m = logb.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double val, gi, inv, inv2, phi
    for j in range(n):
        grad[j] = 0.0
        for k in range(n):
            hess[j, k] = 0.0
    val = _block_full(A0, b0, z, 0, A0.shape[0], work, gbuf, hbuf)
    phi = t * val
    for j in range(n):
        grad[j] += t * gbuf[j]
        for k in range(n):
            hess[j, k] += t * hbuf[j, k]
    for i in range(m):
        val = _block_full(Ac, bc, z, starts[i], starts[i + 1], work, gbuf, hbuf)
        gi = val - logb[i]
        if gi >= 0.0:
            return float("inf"), False
        inv = 1.0 / (-gi)
        inv2 = inv * inv
        phi -= log(-gi)
        for j in range(n):
            grad[j] += inv * gbuf[j]
            for k in range(n):
                hess[j, k] += inv * hbuf[j, k] + inv2 * gbuf[j] * gbuf[k]
    return phi, True
