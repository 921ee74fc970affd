# cython: language_level=3
"""Compiled inner loops.

Every function here has a numpy twin in :mod:`fracspec._pykernels` with the
same signature; :mod:`fracspec._kernels` picks one at import time.
"""

from libc.math cimport floor

import numpy as np


def caputo_rows(const double[:, ::1] g, const double[::1] conv,
                const double[::1] far, double[:, ::1] out):
    """Product-integration sums for each row of ``g``.

    ``out[r, i] = sum_{k<i} conv[k] * g[r, i-k] + far[i-1] * g[r, 0]``,
    with ``out[r, 0] = 0``.
    """
    cdef Py_ssize_t rows = g.shape[0], n = g.shape[1]
    cdef Py_ssize_t r, i, k
    cdef double acc
    with nogil:
        for r in range(rows):
            out[r, 0] = 0.0
            for i in range(1, n):
                acc = far[i - 1] * g[r, 0]
                for k in range(i):
                    acc = acc + conv[k] * g[r, i - k]
                out[r, i] = acc


cdef void _stencil(double t, Py_ssize_t n, Py_ssize_t* base, double* w) noexcept nogil:
    """4-point Lagrange weights at ``t`` on nodes ``base .. base + 3``."""
    cdef Py_ssize_t i0 = <Py_ssize_t>floor(t)
    cdef Py_ssize_t b
    cdef double u
    if i0 >= n - 1:
        t = n - 1
        i0 = n - 1
    b = i0 - 1
    if b < 0:
        b = 0
    if b > n - 4:
        b = n - 4
    base[0] = b
    if t - i0 < 1e-12:
        w[0] = 0.0
        w[1] = 0.0
        w[2] = 0.0
        w[3] = 0.0
        w[i0 - b] = 1.0
        return
    u = t - b
    w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w[1] = u * (u - 2.0) * (u - 3.0) / 2.0
    w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0
    w[3] = u * (u - 1.0) * (u - 2.0) / 6.0


def shifted_difference_rows(const double[:, ::1] f, double shift, int order,
                            double[:, ::1] out):
    """Forward difference of ``order`` with step ``shift`` (in node units).

    Off-node values come from 4-point Lagrange interpolation. Returns the
    number of leading nodes whose whole stencil stays inside the row; the
    remaining entries of ``out`` are zeroed.
    """
    cdef Py_ssize_t rows = f.shape[0], n = f.shape[1]
    cdef Py_ssize_t r, j, s, q, n_valid, b
    cdef double acc, jmax
    cdef double[::1] coef = np.empty(order + 1)
    cdef double c = 1.0
    for s in range(order + 1):
        coef[s] = c if (order - s) % 2 == 0 else -c
        c = c * (order - s) / (s + 1)
    jmax = floor(n - 1 - order * shift + 1e-9)
    n_valid = <Py_ssize_t>(jmax + 1) if jmax >= 0 else 0
    if n_valid > n:
        n_valid = n
    # row-independent stencils, binomial coefficients folded into the weights
    cdef Py_ssize_t[:, ::1] base = np.zeros((max(n_valid, 1), order + 1), dtype=np.intp)
    cdef double[:, :, ::1] w = np.zeros((max(n_valid, 1), order + 1, 4))
    with nogil:
        for j in range(n_valid):
            for s in range(order + 1):
                _stencil(j + s * shift, n, &base[j, s], &w[j, s, 0])
                for q in range(4):
                    w[j, s, q] = w[j, s, q] * coef[s]
        for r in range(rows):
            for j in range(n_valid):
                acc = 0.0
                for s in range(order + 1):
                    b = base[j, s]
                    acc = acc + (w[j, s, 0] * f[r, b] + w[j, s, 1] * f[r, b + 1]
                                 + w[j, s, 2] * f[r, b + 2] + w[j, s, 3] * f[r, b + 3])
                out[r, j] = acc
            for j in range(n_valid, n):
                out[r, j] = 0.0
    return n_valid


cdef inline double complex _cmul(double complex a, double complex b) noexcept nogil:
    # plain product; C's checked complex multiply is several times slower
    return (a.real * b.real - a.imag * b.imag) + 1j * (a.real * b.imag + a.imag * b.real)


def duhamel_march(const double complex[::1] decay,
                  const double complex[::1] w_prev,
                  const double complex[::1] w_next,
                  const double complex[:, ::1] forcing,
                  double complex[:, ::1] out):
    """Exponential-integrator recursion, one column per frequency.

    ``out[0] = 0`` and
    ``out[n+1] = decay * out[n] + w_prev * forcing[n] + w_next * forcing[n+1]``.
    """
    cdef Py_ssize_t steps = forcing.shape[0], kdim = forcing.shape[1]
    cdef Py_ssize_t n, j
    with nogil:
        for j in range(kdim):
            out[0, j] = 0.0
        for n in range(steps - 1):
            for j in range(kdim):
                out[n + 1, j] = (_cmul(decay[j], out[n, j]) + _cmul(w_prev[j], forcing[n, j])
                                 + _cmul(w_next[j], forcing[n + 1, j]))
