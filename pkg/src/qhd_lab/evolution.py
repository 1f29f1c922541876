"""Split-operator propagator for gradient-based quantum Hamiltonian descent.

At time ``t`` the Hamiltonian is split as ``H = H1 + H2 + H3`` with

* ``H1 = |p|^2 / (2 t^3)`` (kinetic, diagonal in Fourier space),
* ``H2 = (alpha / 2) sum_j {p_j, v_j}`` with ``v_j = df/dx_j`` (mixed),
* ``H3 = ((alpha^2 + beta) / 2) t^3 |grad f|^2 + (t^3 + gamma t^2) f`` (potential),

and one step applies ``exp(-i h H1) exp(-i h H2) exp(-i h H3)`` to the state,
potential first.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from qhd_lab import kernels
from qhd_lab.analysis import lyapunov_E, lyapunov_F, observables
from qhd_lab.krylov import MAX_DIM, LanczosError, expm_multiply_hermitian
from qhd_lab.mesh import (
    Grid,
    GridMismatchError,
    WaveFunction,
    check_normalized,
    fft,
    ifft,
    momentum,
)
from qhd_lab.metrics import MetricsSeries
from qhd_lab.objectives import ObjectiveSpec, eval_fields

log = logging.getLogger(__name__)

LANCZOS_TOL = 1e-10
MAX_SUBSTEP_HALVINGS = 10
DENSE_MAX_N = 256


@dataclass(frozen=True)
class HamiltonianParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    t0: float = 0.0
    h: float = 0.01
    K: int = 1
    substeps: int = 1  # product-formula steps per iteration, each of length h / substeps

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size h must be positive, got {self.h}")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if self.t0 < 0:
            raise ValueError(f"t0 must be nonnegative, got {self.t0}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError(f"substeps must be a positive integer, got {self.substeps}")

    @property
    def omega(self) -> float:
        return self.gamma - 3 * self.alpha

    def t(self, k: int) -> float:
        return self.t0 + k * self.h

    def inner_times(self, k: int):
        """Frozen times of the sub-steps making up iteration ``k`` (ends at ``t(k)``)."""
        n = self.substeps
        if n == 1:
            return [self.t(k)]
        return [self.t0 + ((k - 1) * n + i) * (self.h / n) for i in range(1, n + 1)]


@dataclass
class StepReport:
    k: int
    t_k: float
    norm_drift: float
    lanczos_dim: int
    wall_ns: int
    lanczos_substeps: int = 0


def mixed_matvec(amp: np.ndarray, grid: Grid, grads) -> np.ndarray:
    """``M psi`` with ``M = 1/2 sum_j (p_j v_j + v_j p_j)``."""
    out = np.zeros(amp.size, dtype=complex)
    for j, v in enumerate(grads):
        p_psi = momentum(amp, grid, j)
        p_vpsi = momentum(v * amp, grid, j)
        kernels.anticommutator_combine(out, v.reshape(-1), p_psi.reshape(-1), p_vpsi.reshape(-1), 0.5)
    return out.reshape(amp.shape)


def _mixed_apply(amp, grid, grads, h_eff, tol, max_dim):
    """Apply ``exp(-i h_eff M)``; split into equal sub-intervals if Lanczos stalls.

    ``M`` does not depend on time, so ``exp(-i h M) = exp(-i h M / n)^n``
    exactly and splitting only changes the cost.
    """
    matvec = lambda x: mixed_matvec(x, grid, grads)  # noqa: E731
    for halvings in range(MAX_SUBSTEP_HALVINGS + 1):
        n_sub = 2**halvings
        try:
            out, dim_max = amp, 0
            for _ in range(n_sub):
                out, dim = expm_multiply_hermitian(matvec, out, h_eff / n_sub, tol=tol / n_sub, max_dim=max_dim)
                dim_max = max(dim_max, dim)
            return out, dim_max, n_sub
        except LanczosError as exc:
            last = exc
    raise LanczosError(
        f"mixed step failed even with {2**MAX_SUBSTEP_HALVINGS} sub-intervals of h_eff={h_eff}: {last}; "
        "the step size is too large for the gradient field's scale"
    )


def mixed_step_lanczos(wf: WaveFunction, h_eff: float, grad_fields, tol: float = LANCZOS_TOL,
                       max_dim: int = MAX_DIM, substeps: bool = False):
    """Approximate ``exp(-i h_eff M) wf`` by Lanczos; returns ``(wf, dim_used)``.

    With ``substeps=False`` a stalled Krylov iteration raises LanczosError;
    otherwise the interval is halved until each piece converges.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    for g in grad_fields:
        if g.grid != wf.grid:
            raise GridMismatchError("gradient field lives on a different grid")
    grads = [g.val for g in grad_fields]
    if h_eff == 0 or not any(np.any(g) for g in grads):
        return wf.copy(), 0
    if substeps:
        out, dim, _ = _mixed_apply(wf.amp, wf.grid, grads, h_eff, tol, max_dim)
    else:
        out, dim = expm_multiply_hermitian(lambda x: mixed_matvec(x, wf.grid, grads), wf.amp, h_eff,
                                           tol=tol, max_dim=max_dim)
    out = _renormalize_if_drifted(out, wf.norm_sq())
    return WaveFunction(wf.grid, out), dim


def _renormalize_if_drifted(amp, target):
    nrm = kernels.norm_sq(amp.reshape(-1))
    drift = abs(nrm - target)
    if drift > 1e-12 * max(target, 1.0):
        log.warning("Lanczos step changed the norm by %.3g; renormalizing", drift)
        amp = amp * np.sqrt(target / nrm)
    return amp


class Propagator:
    """Reusable per-run state: flattened fields and the split-step factors."""

    def __init__(self, grid: Grid, fields, params: HamiltonianParams, tol: float = LANCZOS_TOL,
                 max_dim: int = MAX_DIM):
        self.grid = grid
        self.params = params
        self.f = fields.f.val
        self.G = fields.gradnorm_sq.val
        self.grads = [g.val for g in fields.grad]
        self.ksq = grid.ksq
        self.tol = tol
        self.max_dim = max_dim

    def potential(self, amp, t, h):
        p = self.params
        c_g = 0.5 * (p.alpha**2 + p.beta) * t**3
        c_f = t**3 + p.gamma * t**2
        flat = amp.reshape(-1)
        if c_g == 0.0:
            kernels.phase_multiply(flat, (self.f * c_f).reshape(-1), h)
        else:
            kernels.phase_multiply2(flat, self.G.reshape(-1), c_g, self.f.reshape(-1), c_f, h)
        return amp

    def mixed(self, amp, h):
        if self.params.alpha == 0.0:
            return amp, 0, 0
        out, dim, n_sub = _mixed_apply(amp, self.grid, self.grads, h * self.params.alpha, self.tol, self.max_dim)
        return out, dim, n_sub

    def kinetic(self, amp, t, h):
        spec = fft(amp)
        kernels.phase_multiply(spec.reshape(-1), (self.ksq / (2 * t**3)).reshape(-1), h)
        return ifft(spec)

    def advance(self, amp, t, h, k=0, inverse=False):
        """One split step on a raw amplitude array; returns ``(amp, StepReport)``."""
        if not t > 0:
            raise ValueError(f"t_k must be positive (kinetic coefficient 1/t^3), got {t}")
        start = time.perf_counter_ns()
        n0 = kernels.norm_sq(amp.reshape(-1))
        amp = amp.copy()
        if not inverse:
            amp = self.potential(amp, t, h)
            amp, dim, n_sub = self.mixed(amp, h)
            amp = self.kinetic(amp, t, h)
        else:
            amp = self.kinetic(amp, t, -h)
            amp, dim, n_sub = self.mixed(amp, -h)
            amp = self.potential(amp, t, -h)
        drift = abs(kernels.norm_sq(amp.reshape(-1)) - n0)
        return amp, StepReport(k, t, drift, dim, time.perf_counter_ns() - start, n_sub)


def step(wf: WaveFunction, params: HamiltonianParams, fields, t_k: float, *, h=None, k: int = 0,
         inverse: bool = False, tol: float = LANCZOS_TOL):
    """One product-formula step at frozen time ``t_k``.

    ``inverse=True`` applies the exact inverse of the forward step (factors
    reversed, each with ``-h``).
    """
    check_normalized(wf)
    if fields.f.grid != wf.grid:
        raise GridMismatchError("objective fields live on a different grid")
    prop = Propagator(wf.grid, fields, params, tol=tol)
    amp, rep = prop.advance(wf.amp, float(t_k), params.h if h is None else float(h), k=k, inverse=inverse)
    return WaveFunction(wf.grid, amp), rep


def evolve(wf0: WaveFunction, params: HamiltonianParams, obj: ObjectiveSpec, observe_every: int = 1, *,
           delta: float = 1.0, lyapunov: str | None = None, fields=None, tol: float = LANCZOS_TOL,
           reports: list | None = None):
    """Run ``K`` iterations with ``t_k = t0 + k h`` and record observables.

    Each iteration applies ``params.substeps`` product-formula steps of
    length ``h / substeps`` (one step by default). Observations are taken every ``observe_every`` steps and at ``k = K``.
    ``lyapunov`` may be ``"E"`` or ``"F"`` to also record that functional
    (the objective must then be centered). Step reports are appended to
    ``reports`` when a list is given.
    """
    if int(observe_every) != observe_every or observe_every < 1:
        raise ValueError(f"observe_every must be a positive integer, got {observe_every}")
    if lyapunov not in (None, "E", "F"):
        raise ValueError(f"lyapunov must be None, 'E' or 'F', got {lyapunov!r}")
    check_normalized(wf0)
    grid = wf0.grid
    if fields is None:
        fields = eval_fields(obj, grid)
    prop = Propagator(grid, fields, params, tol=tol)
    series = MetricsSeries(delta=delta, f_min=obj.f_min)
    mask = (fields.f.val - obj.f_min <= delta)
    amp = wf0.amp
    max_drift = 0.0
    max_sub = 1
    h_in = params.h / params.substeps
    for k in range(1, params.K + 1):
        for t in params.inner_times(k):
            amp, rep = prop.advance(amp, t, h_in, k=k)
            max_drift = max(max_drift, abs(kernels.norm_sq(amp.reshape(-1)) - 1.0))
            max_sub = max(max_sub, rep.lanczos_substeps)
            if reports is not None:
                reports.append(rep)
        t = params.t(k)
        if k % observe_every == 0 or k == params.K:
            wf = WaveFunction(grid, amp)
            rec = observables(wf, obj, delta, fields=fields, mask=mask)
            rec.k, rec.t = k, t
            if lyapunov == "E":
                rec.lyapunov = lyapunov_E(wf, obj, params, t, fields=fields)
            elif lyapunov == "F":
                rec.lyapunov = lyapunov_F(wf, obj, params, t, fields=fields)
            series.append(rec)
    series.meta.update(max_norm_drift=max_drift, max_lanczos_substeps=max_sub)
    return WaveFunction(grid, amp), series


# ---------------------------------------------------------------------------
# Dense oracles (1D, small N)


def dft_matrix(n: int) -> np.ndarray:
    return scipy.linalg.dft(n, scale="sqrtn")


def spectral_matrices(grid: Grid):
    """Dense ``(P, L)``: momentum (Nyquist zeroed) and ``|p|^2`` (Nyquist kept)."""
    if grid.dim != 1:
        raise ValueError("dense operators are 1D only")
    if grid.n > DENSE_MAX_N:
        raise ValueError(f"dense operators limited to N <= {DENSE_MAX_N}, got {grid.n}")
    F = dft_matrix(grid.n)
    Fh = F.conj().T
    P = Fh @ (grid.deriv_freqs[0][:, None] * F)
    L = Fh @ (grid.freqs[0][:, None] ** 2 * F)
    return P, L


def dense_hamiltonian(grid: Grid, obj: ObjectiveSpec, params: HamiltonianParams, t: float) -> np.ndarray:
    P, L = spectral_matrices(grid)
    x = grid.axes[0][:, None]
    f = np.asarray(obj.f(x), dtype=float).reshape(-1)
    v = np.asarray(obj.grad(x), dtype=float).reshape(-1)
    V = np.diag(v)
    a, b, g = params.alpha, params.beta, params.gamma
    H = L / (2 * t**3) + 0.5 * a * (P @ V + V @ P)
    H += np.diag(0.5 * (a * a + b) * t**3 * v * v + (t**3 + g * t**2) * f)
    return H


def reference_step_dense(wf: WaveFunction, obj: ObjectiveSpec, params: HamiltonianParams, t: float,
                         h: float) -> WaveFunction:
    """``exp(-i h H(t)) wf`` by dense Hermitian eigendecomposition."""
    H = dense_hamiltonian(wf.grid, obj, params, t)
    w, U = scipy.linalg.eigh(H)
    out = U @ (np.exp(-1j * h * w) * (U.conj().T @ wf.amp))
    return WaveFunction(wf.grid, out)
