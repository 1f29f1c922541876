"""Hermitian Lanczos approximation of ``exp(-i tau M) v``."""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal

MAX_DIM = 48


class LanczosError(RuntimeError):
    """Krylov iteration hit its dimension cap before meeting the tolerance."""


def _expm_tridiag_e1(alpha, beta, tau):
    """First column of ``exp(-i tau T)`` for the real symmetric tridiagonal T."""
    if len(alpha) == 1:
        return np.array([np.exp(-1j * tau * alpha[0])])
    w, S = eigh_tridiagonal(alpha, beta)
    return S @ (np.exp(-1j * tau * w) * S[0])


def expm_multiply_hermitian(matvec, v, tau, tol=1e-10, max_dim=MAX_DIM):
    """Approximate ``exp(-i tau M) v`` for Hermitian ``M`` given by ``matvec``.

    Runs Lanczos with full reorthogonalization and stops once the a-posteriori
    estimate ``|v| * beta_m * |e_m^T exp(-i tau T_m) e_1|`` drops below ``tol``
    (or the Krylov space becomes invariant). Returns ``(w, dim_used)``.

    Raises LanczosError if ``max_dim`` vectors are not enough.
    """
    shape = v.shape
    v = v.reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0.0 or tau == 0.0:
        return v.reshape(shape).copy(), 0
    n = v.size
    max_dim = min(max_dim, n)
    Q = np.empty((max_dim, n), dtype=complex)
    Q[0] = v / nrm
    alpha, beta = [], []
    err = np.inf
    for m in range(max_dim):
        w = matvec(Q[m].reshape(shape)).reshape(-1)
        a = np.vdot(Q[m], w).real
        w = w - a * Q[m]
        if m > 0:
            w -= beta[-1] * Q[m - 1]
        # full reorthogonalization, applied twice for stability
        for _ in range(2):
            w -= Q[: m + 1].T @ (Q[: m + 1].conj() @ w)
        alpha.append(a)
        b = np.linalg.norm(w)
        c = _expm_tridiag_e1(np.array(alpha), np.array(beta), tau)
        err = nrm * b * abs(c[-1])
        if err <= tol or b <= 1e-13 * nrm * (abs(a) + 1.0):
            return (nrm * (c @ Q[: m + 1])).reshape(shape), m + 1
        if m + 1 < max_dim:
            beta.append(b)
            Q[m + 1] = w / b
    raise LanczosError(
        f"Lanczos did not converge in {max_dim} iterations (residual estimate {err:.3g} > tol {tol:.3g})"
    )
