"""Classical baselines: SGDM, NAG, ensembles over random starts, and the
classical Hamiltonian flow with its high-resolution ODE residual."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qhd_lab.metrics import MetricsSeries, Record
from qhd_lab.objectives import ObjectiveSpec


class DivergenceError(FloatingPointError):
    """A classical run produced a non-finite value."""


@dataclass(frozen=True)
class SgdmConfig:
    K: int
    s0: float = 0.01
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    def eta(self, k):
        return 0.5 + 0.4 * np.asarray(k) / self.K

    def step_size(self, k):
        return self.s0 / np.asarray(k)


@dataclass(frozen=True)
class NagConfig:
    K: int
    s: float = 0.01
    seed: int = 0
    y0_zero: bool = False  # literal "y0 = 0" initialization instead of y0 = x0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("s must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass
class RunRecord:
    iterates: np.ndarray
    f_values: np.ndarray
    seed: int


def _finite_or_raise(arr, what, k):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(f"non-finite {what} at iteration {k}")


def _sgdm(obj, cfg, X0, noise):
    """Vectorized SGDM over a batch of starts ``X0`` with noise ``(K, n, d)``."""
    X = np.array(X0, dtype=float)
    V = np.zeros_like(X)
    traj = [X.copy()]
    for k in range(1, cfg.K + 1):
        eta = 0.5 + 0.4 * k / cfg.K
        g = obj.grad(X) + noise[k - 1]
        V = eta * V - (1 - eta) * (cfg.s0 / k) * g
        X = X + V
        traj.append(X.copy())
    return np.stack(traj)


def _nag(obj, cfg, X0):
    X = np.array(X0, dtype=float)
    Y = np.zeros_like(X) if cfg.y0_zero else X.copy()
    traj = [X.copy()]
    for k in range(1, cfg.K + 1):
        X_new = Y - cfg.s * obj.grad(Y)
        Y = X_new + (k - 1) / (k + 2) * (X_new - X)
        X = X_new
        traj.append(X.copy())
    return np.stack(traj)


def _run_record(obj, traj, seed):
    with np.errstate(all="ignore"):
        fv = np.asarray(obj.f(traj), dtype=float)
    for k in range(traj.shape[0]):
        _finite_or_raise(traj[k], "iterate", k)
        _finite_or_raise(fv[k], "objective value", k)
        _finite_or_raise(obj.grad(traj[k]), "gradient", k)
    return RunRecord(traj, fv, seed)


def sgdm_run(obj: ObjectiveSpec, cfg: SgdmConfig, x0) -> RunRecord:
    """SGDM with ``eta_k = 0.5 + 0.4 k / K``, ``s_k = s0 / k`` and Gaussian gradient noise."""
    x0 = np.asarray(x0, dtype=float).reshape(obj.dim)
    rng = np.random.default_rng(cfg.seed)
    noise = cfg.noise_std * rng.standard_normal((cfg.K, obj.dim))
    with np.errstate(all="ignore"):
        traj = _sgdm(obj, cfg, x0, noise)
    return _run_record(obj, traj, cfg.seed)


def nag_run(obj: ObjectiveSpec, cfg: NagConfig, x0) -> RunRecord:
    x0 = np.asarray(x0, dtype=float).reshape(obj.dim)
    with np.errstate(all="ignore"):
        traj = _nag(obj, cfg, x0)
    return _run_record(obj, traj, cfg.seed)


def run_stream(master_seed: int, run_index: int) -> np.random.Generator:
    """Per-run generator; depends only on ``(master_seed, run_index)``."""
    return np.random.default_rng([int(master_seed), int(run_index)])


def ensemble(optimizer: str, obj: ObjectiveSpec, n_runs: int, master_seed: int, cfg, *,
             delta: float = 1.0, observe_every: int = 1, x0=None) -> MetricsSeries:
    """Sample-average metrics over ``n_runs`` independent runs.

    Each run draws its start uniformly from ``obj.box`` (unless ``x0`` pins it)
    and, for SGDM, its noise sequence from ``run_stream(master_seed, i)``.
    Runs that diverge are dropped and counted in ``meta["failed_runs"]``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if optimizer not in ("sgdm", "nag"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    lo, w = np.asarray(obj.box.lo), obj.box.widths
    X0 = np.empty((n_runs, obj.dim))
    noise = np.zeros((cfg.K, n_runs, obj.dim))
    for i in range(n_runs):
        rng = run_stream(master_seed, i)
        X0[i] = lo + w * rng.random(obj.dim)
        if optimizer == "sgdm":
            noise[:, i, :] = cfg.noise_std * rng.standard_normal((cfg.K, obj.dim))
    if x0 is not None:
        X0[:] = np.asarray(x0, dtype=float)
    with np.errstate(all="ignore"):
        traj = _sgdm(obj, cfg, X0, noise) if optimizer == "sgdm" else _nag(obj, cfg, X0)
        fv = obj.f(traj)
        gsq = np.sum(obj.grad(traj) ** 2, axis=-1)
    ok = np.all(np.isfinite(fv) & np.isfinite(gsq), axis=0) & np.all(np.isfinite(traj), axis=(0, 2))
    n_ok = int(ok.sum())
    series = MetricsSeries(delta=delta, f_min=obj.f_min,
                           meta={"n_runs": n_runs, "failed_runs": n_runs - n_ok, "master_seed": master_seed})
    if n_ok == 0:
        raise DivergenceError(f"all {n_runs} runs diverged")
    fv, gsq = fv[:, ok], gsq[:, ok]
    succ = (fv - obj.f_min <= delta)
    for k in range(1, cfg.K + 1):
        if k % observe_every == 0 or k == cfg.K:
            series.append(Record(k, float(k), float(fv[k].mean()), float(gsq[k].mean()), float(succ[k].mean())))
    return series


# ---------------------------------------------------------------------------
# Classical Hamiltonian flow


@dataclass
class ClassicalState:
    X: np.ndarray
    P: np.ndarray
    t: float

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.P = np.asarray(self.P, dtype=float)
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.P))):
            raise ValueError("state must be finite")


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    P: np.ndarray
    alpha: float
    beta: float
    gamma: float
    form: str
    aborted: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def state(self, i) -> ClassicalState:
        return ClassicalState(self.X[i], self.P[i], float(self.t[i]))


FORMS = ("printed", "legendre")


def flow_field(obj, alpha, beta, gamma, form="printed"):
    """Right-hand side ``(t, X, P) -> (dX/dt, dP/dt)`` of the gradient-augmented flow.

    ``form="printed"`` uses ``dX/dt = P / (2 t^3) + alpha grad f``;
    ``form="legendre"`` uses ``dX/dt = P / t^3 + alpha grad f``, which is what
    the Legendre transform of the Lagrangian gives. ``dP/dt`` is shared.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    c = 0.5 if form == "printed" else 1.0

    def rhs(t, X, P):
        g = obj.grad(X)
        H = obj.hess(X)
        dX = c * P / t**3 + alpha * g
        dP = -H @ (alpha * P + (alpha**2 + beta) * t**3 * g) - (t**3 + gamma * t**2) * g
        return dX, dP

    return rhs


def ham_flow_rk4(obj: ObjectiveSpec, alpha: float, beta: float, gamma: float, state0: ClassicalState,
                 T: float, dt: float, form: str = "printed") -> Trajectory:
    """Classical RK4 on ``[state0.t, T]``, sampling every step.

    A non-finite state stops the integration; the trajectory up to the last
    good state is returned with ``aborted=True``.
    """
    if not state0.t > 0:
        raise ValueError("initial time must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    rhs = flow_field(obj, alpha, beta, gamma, form)
    n = int(round((T - state0.t) / dt))
    if n < 1 or abs(state0.t + n * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("(T - t0) must be a positive integer multiple of dt")
    ts = [state0.t]
    Xs = [state0.X.copy()]
    Ps = [state0.P.copy()]
    X, P, t = state0.X.copy(), state0.P.copy(), state0.t
    aborted = False
    for i in range(n):
        with np.errstate(all="ignore"):  # a blow-up is detected below
            k1x, k1p = rhs(t, X, P)
            k2x, k2p = rhs(t + dt / 2, X + dt / 2 * k1x, P + dt / 2 * k1p)
            k3x, k3p = rhs(t + dt / 2, X + dt / 2 * k2x, P + dt / 2 * k2p)
            k4x, k4p = rhs(t + dt, X + dt * k3x, P + dt * k3p)
            Xn = X + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            Pn = P + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Pn))):
            aborted = True
            break
        X, P, t = Xn, Pn, state0.t + (i + 1) * dt
        ts.append(t)
        Xs.append(X)
        Ps.append(P)
    return Trajectory(np.array(ts), np.array(Xs), np.array(Ps), alpha, beta, gamma, form, aborted)


def matched_parameters(s: float, alpha: float):
    """``(beta, gamma)`` with ``beta / alpha = sqrt(s)`` and ``gamma - 3 alpha = 3 sqrt(s) / 2``."""
    r = np.sqrt(s)
    return alpha * r, 3 * alpha + 1.5 * r


def highres_residual(traj: Trajectory, obj: ObjectiveSpec, s: float) -> np.ndarray:
    """Pointwise norm of the high-resolution ODE residual along ``traj``.

    ``X'`` and ``X''`` come from central differences of the samples. The
    momentum in the ``sqrt(s) / (2 t^3) Hess f P`` term is taken in the
    normalization where ``dX/dt = P / (2 t^3) + alpha grad f``, i.e. it is
    doubled for a Legendre-form trajectory.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples for central differences")
    t, X = traj.t, traj.X
    P = traj.P * (2.0 if traj.form == "legendre" else 1.0)
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("trajectory must be uniformly sampled")
    h = dt[0]
    Xd = (X[2:] - X[:-2]) / (2 * h)
    Xdd = (X[2:] - 2 * X[1:-1] + X[:-2]) / h**2
    tc, Xc, Pc = t[1:-1], X[1:-1], P[1:-1]
    g = obj.grad(Xc)
    H = obj.hess(Xc)
    r = np.sqrt(s)
    res = (Xdd + (3 / tc)[:, None] * Xd + r * np.einsum("nij,nj->ni", H, Xd)
           + (1 + 1.5 * r / tc)[:, None] * g
           - (r / (2 * tc**3))[:, None] * np.einsum("nij,nj->ni", H, Pc))
    return np.linalg.norm(res, axis=1)
