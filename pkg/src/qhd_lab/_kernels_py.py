"""NumPy fallback for the compiled pointwise kernels.

Signatures and semantics match ``_kernels.pyx`` exactly; all arrays are flat
and C-contiguous.
"""

import numpy as np

BACKEND = "numpy"


def phase_multiply(amp, field, theta):
    if field.shape[0] != amp.shape[0]:
        raise ValueError("length mismatch")
    amp *= np.exp(-1j * theta * field)


def phase_multiply2(amp, a, ca, b, cb, theta):
    if a.shape[0] != amp.shape[0] or b.shape[0] != amp.shape[0]:
        raise ValueError("length mismatch")
    amp *= np.exp(-1j * theta * (ca * a + cb * b))


def norm_sq(amp):
    return float(np.vdot(amp, amp).real)


def weighted_sum(amp, field):
    if field.shape[0] != amp.shape[0]:
        raise ValueError("length mismatch")
    return float(np.dot(field, amp.real**2 + amp.imag**2))


def observe(amp, f, g, mask):
    if not (f.shape[0] == g.shape[0] == mask.shape[0] == amp.shape[0]):
        raise ValueError("length mismatch")
    p = amp.real**2 + amp.imag**2
    return float(p.sum()), float(np.dot(f, p)), float(np.dot(g, p)), float(p[mask.view(bool)].sum())


def anticommutator_combine(out, v, p_psi, p_vpsi, scale):
    out += scale * (p_vpsi + v * p_psi)
