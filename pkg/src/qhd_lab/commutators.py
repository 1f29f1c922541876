"""Numerical checks of the commutation relations behind the Lyapunov analysis.

Operators are dense matrices on a small periodic mesh: ``P`` is the spectral
momentum (Nyquist column zeroed), fields act as diagonal matrices and
``A = t^{-3/2} P + alpha t^{3/2} V`` with ``V = diag(f')``.

Two regimes are used.

* Relations built only from periodic fields (``[A^2, f]``, ``[v^2, {A, x}]``
  and the two generic lemmas) are compared as full matrices after compressing
  both sides to the de-aliased band ``|k| <= kc``. A pseudo-spectral product of
  band-limited factors is exact once the band leaves room for the fields'
  own bandwidth; outside that band the discrete commutators pick up aliasing
  that has nothing to do with the identity.
* Relations whose continuum form involves position ``x`` acting on ``p`` are
  applied to a battery of smooth, interior-localized Gaussian vectors, where
  the sawtooth jump of ``x`` on the torus is invisible up to the Gaussian tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qhd_lab.mesh import BoxDomain, make_grid

DENSE_MAX_N = 128
FULL_TOL = 1e-8
VECTOR_TOL = 1e-6

# name -> (f, f', f'', bandwidth of f)
FIELD_CHOICES = {
    "sin": (np.sin, np.cos, lambda x: -np.sin(x), 1),
    "sin_mix": (lambda x: np.sin(x) + 0.3 * np.cos(2 * x),
                lambda x: np.cos(x) - 0.6 * np.sin(2 * x),
                lambda x: -np.sin(x) - 1.2 * np.cos(2 * x), 2),
}


@dataclass
class IdentityResult:
    name: str
    regime: str
    residual: float
    tol: float
    raw_residual: float = float("nan")

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tol)


@dataclass
class CommutatorReport:
    n: int
    f_choice: str
    alpha: float
    t: float
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self):
        return [r for r in self.results if not r.passed]

    def table(self) -> str:
        lines = [f"{'identity':<34} {'regime':<8} {'residual':>11} {'tol':>8}  result"]
        for r in self.results:
            lines.append(f"{r.name:<34} {r.regime:<8} {r.residual:11.3e} {r.tol:8.0e}  "
                         f"{'PASS' if r.passed else 'FAIL'}")
        return "\n".join(lines)


def comm(a, b):
    return a @ b - b @ a


def acomm(a, b):
    return a @ b + b @ a


def _dft_ops(n, width):
    k = 2 * np.pi / width * np.fft.fftfreq(n, d=1.0 / n)
    kd = k.copy()
    kd[n // 2] = 0.0
    F = np.fft.fft(np.eye(n), axis=0, norm="ortho")
    Fh = F.conj().T
    return Fh @ (kd[:, None] * F), F, Fh, k


def band_projector(n, width, kc):
    """Orthogonal projector onto Fourier modes with ``|k| <= kc`` (in index units)."""
    _, F, Fh, k = _dft_ops(n, width)
    idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    return Fh @ ((idx <= kc)[:, None] * F)


def _rel(res, ref):
    den = np.linalg.norm(ref)
    return float(np.linalg.norm(res) / den) if den > 0 else float(np.linalg.norm(res))


def _full(name, lhs, rhs, Q):
    r = lhs - rhs
    return IdentityResult(name, "full", _rel(Q @ r @ Q, Q @ rhs @ Q), FULL_TOL, _rel(r, rhs))


def gaussian_battery(x, center=np.pi, sigmas=(0.3, 0.25), waves=(0, 1, 2)):
    """Gaussians ``exp(-(x - c)^2 / (4 sigma^2)) e^{i k x}`` at the box center, unit norm, as columns.

    At ``sigma = 0.3`` the amplitude at distance ``pi`` from the center is
    about ``1e-12``, so the sawtooth jump of ``x`` stays below the tolerance.
    """
    cols = []
    for sigma in sigmas:
        for kw in waves:
            v = np.exp(-((x - center) ** 2) / (4 * sigma**2)) * np.exp(1j * kw * x)
            cols.append(v / np.linalg.norm(v))
    return np.stack(cols, axis=1)


def _on_vectors(name, lhs, rhs, scale, Psi):
    r = (lhs - rhs) @ Psi
    s = scale @ Psi
    worst = max(np.linalg.norm(r[:, i]) / np.linalg.norm(s[:, i]) for i in range(Psi.shape[1]))
    return IdentityResult(name, "vectors", float(worst), VECTOR_TOL)


def commutator_verify(n: int = 64, f_choice="sin", alpha: float = 0.1, t: float = 1.0) -> CommutatorReport:
    """Check the commutation relations on a 1D mesh over ``[0, 2 pi)``.

    ``f_choice`` names an entry of ``FIELD_CHOICES`` or is a tuple
    ``(f, df, d2f, bandwidth)`` of periodic callables.
    """
    if n > DENSE_MAX_N:
        raise ValueError(f"dense commutator checks limited to N <= {DENSE_MAX_N}, got {n}")
    if isinstance(f_choice, str):
        if f_choice not in FIELD_CHOICES:
            raise KeyError(f"unknown field {f_choice!r}; choose from {', '.join(FIELD_CHOICES)}")
        f, df, d2f, bw = FIELD_CHOICES[f_choice]
        label = f_choice
    else:
        f, df, d2f, bw = f_choice
        label = getattr(f, "__name__", "custom")
    width = 2 * np.pi
    grid = make_grid(BoxDomain((0.0,), (width,)), n)
    x = grid.axes[0]
    P, _, _, _ = _dft_ops(n, width)
    I = np.eye(n)
    Fm, V, H2 = np.diag(f(x)), np.diag(df(x)), np.diag(d2f(x))
    X = np.diag(x)
    A = t**-1.5 * P + alpha * t**1.5 * V
    A2 = A @ A
    # every product below multiplies at most two bandwidth-bw fields into a band-kc vector
    Q = band_projector(n, width, n // 2 - 1 - 2 * bw)

    rep = CommutatorReport(n, label, alpha, t)
    res = rep.results
    res.append(_full("[A^2, f]", 1j * comm(A2, Fm), t**-3 * acomm(P, V) + 2 * alpha * V @ V, Q))
    res.append(_full("[v^2, {A, x}]", 1j * comm(V @ V, acomm(A, X)), -4 * t**-1.5 * H2 @ X @ V, Q))
    res.append(_full("[p^2, g] = {p, g'}", 1j * comm(P @ P, Fm), acomm(P, V), Q))
    res.append(_full("[{p, h}, g] = 2 h g'", 1j * comm(acomm(P, V), Fm), 2 * V @ V, Q))

    Psi = gaussian_battery(x)
    res.append(_on_vectors("[f, {A, x}]", 1j * comm(Fm, acomm(A, X)), -2 * t**-1.5 * X @ V, I, Psi))
    res.append(_on_vectors("[A^2, x^2] (j = k)", 1j * comm(A2, X @ X),
                           2 * t**-3 * acomm(P, X) + 4 * alpha * X @ V, I, Psi))
    res.append(_on_vectors("[A^2, {A, x}] (j = k)", 1j * comm(A2, acomm(A, X)), 4 * t**-1.5 * A2, A2, Psi))
    res.append(_cross_axis(alpha, t))
    return rep


def _cross_axis(alpha, t, n=16):
    """``[A_0^2, x_1^2] = 0`` on a 2D mesh (operators on different axes)."""
    width = 2 * np.pi
    P1, _, _, _ = _dft_ops(n, width)
    x = np.arange(n) * width / n
    I = np.eye(n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    # f(x, y) = sin(x) cos(y): v_0 depends on both axes
    v0 = (np.cos(xx) * np.cos(yy)).reshape(-1)
    P0 = np.kron(P1, I)
    A0 = t**-1.5 * P0 + alpha * t**1.5 * np.diag(v0)
    X1sq = np.diag((yy**2).reshape(-1))
    lhs = 1j * comm(A0 @ A0, X1sq)
    scale = np.linalg.norm(A0 @ A0) * np.linalg.norm(X1sq)
    return IdentityResult("[A_j^2, x_k^2] (j != k, 2D)", "full", float(np.linalg.norm(lhs) / scale), 1e-10)
