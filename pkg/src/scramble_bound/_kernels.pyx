# cython: language_level=3
"""Compiled inner loops.  Signatures mirror ``_kernels_py``.

sinh and cosh are formed from a single exp so the loops vectorize; below
0.05 sinh switches to its odd Taylor series to avoid cancellation at
the tiny arguments met at large depth.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, exp

cnp.import_array()

cdef inline double _sinh(double x, double e) noexcept nogil:
    # both forms are evaluated and mixed arithmetically so the loop vectorizes
    cdef double x2 = x * x
    cdef double series = x * (1.0 + x2 * (1.0 / 6.0) * (1.0 + x2 * (1.0 / 20.0) * (1.0 + x2 * (1.0 / 42.0))))
    cdef double direct = 0.5 * (e - 1.0 / e)
    return series if x < 0.05 else direct


def spectral_sum(const double[::1] energies, const double[::1] weights,
                 const double[::1] t, const double[::1] tau):
    cdef Py_ssize_t n = energies.shape[0]
    cdef Py_ssize_t m = t.shape[0]
    cdef Py_ssize_t i, j
    cdef double e_lo = 0.0, e_hi = 0.0
    cdef bint seen = False
    cdef double s, re_acc, im_acc, amp, ph, tj, uj
    re = np.empty(m)
    im = np.empty(m)
    shift = np.empty(m)
    cdef double[::1] re_v = re
    cdef double[::1] im_v = im
    cdef double[::1] sh_v = shift

    for i in range(n):
        if weights[i] > 0.0:
            if not seen or energies[i] < e_lo:
                e_lo = energies[i]
            if not seen or energies[i] > e_hi:
                e_hi = energies[i]
            seen = True

    for j in range(m):
        tj = t[j]
        uj = tau[j]
        s = -e_lo * uj if uj >= 0.0 else -e_hi * uj
        re_acc = 0.0
        im_acc = 0.0
        for i in range(n):
            # zero weights contribute nothing; no branch keeps the loop vectorizable
            amp = weights[i] * exp(-energies[i] * uj - s)
            ph = energies[i] * tj
            re_acc += amp * cos(ph)
            im_acc -= amp * sin(ph)
        re_v[j] = re_acc
        im_v[j] = im_acc
        sh_v[j] = s
    return re, im, shift


def double_exp_sum(const double[::1] nodes, const double[::1] qweights,
                   double rate, double depth):
    cdef Py_ssize_t j
    cdef double acc = 0.0, x, sh
    for j in range(nodes.shape[0]):
        x = 0.5 * rate * nodes[j]
        sh = _sinh(x, exp(x))
        acc += qweights[j] * exp(-2.0 * depth * sh * sh)
    return acc


def shifted_fourier_sum(const double[::1] nodes, const double[::1] qweights,
                        double rate, double theta, double energy):
    cdef Py_ssize_t j
    cdef double ct = cos(theta), st = sin(theta)
    cdef double re_acc = 0.0, im_acc = 0.0, x, e, sh, ch, amp, ph, y
    for j in range(nodes.shape[0]):
        y = nodes[j]
        x = 0.5 * rate * y
        e = exp(x)
        sh = _sinh(x, e)
        ch = 0.5 * (e + 1.0 / e)
        amp = qweights[j] * exp(-4.0 * ct * sh * sh)
        ph = y * energy - 4.0 * sh * ch * st
        re_acc += amp * cos(ph)
        im_acc += amp * sin(ph)
    return re_acc, im_acc
