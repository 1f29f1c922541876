# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels for the split-operator propagator.

Every routine works on flat, C-contiguous buffers. The Python wrappers in
:mod:`qhd_lab.kernels` take care of reshaping.
"""

from libc.math cimport cos, sin

import numpy as np

BACKEND = "cython"


def phase_multiply(double complex[::1] amp, const double[::1] field, double theta):
    """amp[i] *= exp(-1j * theta * field[i]), in place."""
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double ph, c, s, re, im
    if field.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            ph = theta * field[i]
            c = cos(ph)
            s = sin(ph)
            re = amp[i].real
            im = amp[i].imag
            amp[i] = (re * c + im * s) + 1j * (im * c - re * s)


def phase_multiply2(double complex[::1] amp,
                    const double[::1] a, double ca,
                    const double[::1] b, double cb,
                    double theta):
    """amp[i] *= exp(-1j * theta * (ca * a[i] + cb * b[i])), in place."""
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double ph, c, s, re, im
    if a.shape[0] != n or b.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            ph = theta * (ca * a[i] + cb * b[i])
            c = cos(ph)
            s = sin(ph)
            re = amp[i].real
            im = amp[i].imag
            amp[i] = (re * c + im * s) + 1j * (im * c - re * s)


def norm_sq(const double complex[::1] amp):
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double acc = 0.0
    with nogil:
        for i in range(n):
            acc += amp[i].real * amp[i].real + amp[i].imag * amp[i].imag
    return acc


def weighted_sum(const double complex[::1] amp, const double[::1] field):
    """sum_i field[i] * |amp[i]|^2."""
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double acc = 0.0
    if field.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            acc += field[i] * (amp[i].real * amp[i].real + amp[i].imag * amp[i].imag)
    return acc


def observe(const double complex[::1] amp, const double[::1] f,
            const double[::1] g, const unsigned char[::1] mask):
    """One pass returning (norm, sum f|a|^2, sum g|a|^2, masked mass)."""
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double p, nrm = 0.0, ef = 0.0, eg = 0.0, pm = 0.0
    if f.shape[0] != n or g.shape[0] != n or mask.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            p = amp[i].real * amp[i].real + amp[i].imag * amp[i].imag
            nrm += p
            ef += f[i] * p
            eg += g[i] * p
            if mask[i]:
                pm += p
    return nrm, ef, eg, pm


def anticommutator_combine(double complex[::1] out, const double[::1] v,
                           const double complex[::1] p_psi,
                           const double complex[::1] p_vpsi, double scale):
    """out[i] += scale * (p_vpsi[i] + v[i] * p_psi[i])."""
    cdef Py_ssize_t i, n = out.shape[0]
    with nogil:
        for i in range(n):
            out[i] = out[i] + scale * (p_vpsi[i] + v[i] * p_psi[i])
