"""Observables, Lyapunov functionals, commutator checks and rate fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qhd_lab import kernels
from qhd_lab.mesh import GridMismatchError, WaveFunction, check_normalized, momentum
from qhd_lab.metrics import Record
from qhd_lab.objectives import ObjectiveSpec, eval_fields

ABS_FLOOR = 1e-9


class NotCenteredError(ValueError):
    pass


def _fields_for(wf, obj, fields):
    if fields is None:
        return eval_fields(obj, wf.grid)
    if fields.f.grid != wf.grid:
        raise GridMismatchError("fields and state live on different grids")
    return fields


def observables(wf: WaveFunction, obj: ObjectiveSpec, delta: float = 1.0, *, fields=None,
                mask=None) -> Record:
    """Expected value, expected squared gradient norm and success probability.

    The returned record has ``k = 0`` and ``t = nan``; callers fill them in.
    """
    fields = _fields_for(wf, obj, fields)
    if mask is None:
        mask = fields.f.val - obj.f_min <= delta
    nrm, ef, eg, ps = kernels.observe(
        wf.amp.reshape(-1), fields.f.val.reshape(-1), fields.gradnorm_sq.val.reshape(-1),
        np.ascontiguousarray(mask, dtype=np.uint8).reshape(-1),
    )
    if abs(nrm - 1.0) > 1e-8:
        check_normalized(wf)
    return Record(0, float("nan"), ef, eg, min(max(ps, 0.0), 1.0), abs(nrm - 1.0))


def _require_centered(obj: ObjectiveSpec):
    if obj.f_min != 0.0 or not any(not np.any(m) for m in obj.minimizers):
        raise NotCenteredError(f"{obj.name} is not centered (need x* = 0 and f(x*) = 0); use objectives.center")


def _square_term(wf, fields, params, t):
    """``1/2 sum_j |(t^-2 p_j + alpha t v_j + 2 x_j) psi|^2``."""
    grid = wf.grid
    total = 0.0
    for j in range(grid.dim):
        b = momentum(wf.amp, grid, j) / t**2
        b += (params.alpha * t * fields.grad[j].val + 2.0 * grid.coords[j]) * wf.amp
        total += kernels.norm_sq(b.reshape(-1))
    return 0.5 * total


def lyapunov_E(wf: WaveFunction, obj_centered: ObjectiveSpec, params, t: float, *, fields=None) -> float:
    if not t > 0:
        raise ValueError("t must be positive")
    _require_centered(obj_centered)
    check_normalized(wf)
    fields = _fields_for(wf, obj_centered, fields)
    ef = kernels.weighted_sum(wf.amp.reshape(-1), fields.f.val.reshape(-1))
    return _square_term(wf, fields, params, t) + (t**2 + params.omega * t) * ef


def lyapunov_F(wf: WaveFunction, obj_centered: ObjectiveSpec, params, t: float, *, fields=None) -> float:
    fields = _fields_for(wf, obj_centered, fields)
    e = lyapunov_E(wf, obj_centered, params, t, fields=fields)
    if params.beta == 0:
        return e
    eg = kernels.weighted_sum(wf.amp.reshape(-1), fields.gradnorm_sq.val.reshape(-1))
    return e + 0.5 * params.beta * t**2 * eg


@dataclass
class BoundConstants:
    K0: float
    D0: float
    D0prime: float


def bound_constants(wf0: WaveFunction, obj_centered: ObjectiveSpec, params, T0: float, *,
                    fields=None) -> BoundConstants:
    """Initial kinetic energy ``K0`` and the expectations ``D0``, ``D0'``."""
    if not T0 > 0:
        raise ValueError("T0 must be positive")
    _require_centered(obj_centered)
    check_normalized(wf0)
    fields = _fields_for(wf0, obj_centered, fields)
    grid = wf0.grid
    kin = sum(kernels.norm_sq(momentum(wf0.amp, grid, j).reshape(-1)) for j in range(grid.dim))
    amp = wf0.amp.reshape(-1)
    eg = kernels.weighted_sum(amp, fields.gradnorm_sq.val.reshape(-1))
    ex2 = kernels.weighted_sum(amp, sum(c * c for c in grid.coords).reshape(-1))
    ef = kernels.weighted_sum(amp, fields.f.val.reshape(-1))
    base = 4 * ex2 + (T0**2 + params.omega * T0) * ef
    return BoundConstants(kin / T0**4, eg + base, 2 * eg + base)


def monotonicity_check(series, rel_tol: float = 1e-3):
    """Indices ``k`` where ``value[k+1] > value[k] (1 + rel_tol) + 1e-9``.

    ``series`` is a sequence of ``(t, value)`` pairs; returns a list of
    ``(k, relative_increase)``.
    """
    vals = np.asarray([v for _, v in series], dtype=float)
    if vals.size < 2:
        raise ValueError("need at least two samples")
    out = []
    for k in range(vals.size - 1):
        a, b = vals[k], vals[k + 1]
        if b > a * (1 + rel_tol) + ABS_FLOOR:
            out.append((k, float((b - a) / abs(a)) if a != 0 else float("inf")))
    return out


@dataclass
class LyapunovReport:
    which: str
    values: list
    violations: list
    constants: Optional[BoundConstants] = None
    t: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def lyapunov_report(series, which: str, rel_tol: float = 1e-3, constants=None) -> LyapunovReport:
    """Monotonicity report from a MetricsSeries recorded with ``lyapunov=which``."""
    pairs = [(r.t, r.lyapunov) for r in series.records]
    return LyapunovReport(which, [v for _, v in pairs], monotonicity_check(pairs, rel_tol), constants,
                          [t for t, _ in pairs])


def rate_fit(series, t_window) -> float:
    """Least-squares slope of ``log(value)`` against ``log(t)`` inside ``t_window``."""
    t = np.asarray([p[0] for p in series], dtype=float)
    v = np.asarray([p[1] for p in series], dtype=float)
    lo, hi = t_window
    sel = (t >= lo) & (t <= hi)
    if not np.any(sel):
        raise ValueError(f"no samples in window {t_window}")
    if sel.sum() < 5:
        raise ValueError(f"need at least 5 samples in window {t_window}, got {int(sel.sum())}")
    if np.any(v[sel] <= 0):
        raise ValueError("values must be positive for a log-log fit")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(v[sel]), 1)
    return float(slope)


def convex_G_violation(obj: ObjectiveSpec, grid) -> float:
    """Max over grid nodes of ``G(x) - grad G(x) . x`` (should be <= 0).

    ``grad G = 2 H grad f`` with ``H`` the analytic Hessian.
    """
    pts = grid.points()
    g = obj.grad(pts)
    H = obj.hess(pts)
    G = np.sum(g * g, axis=-1)
    gradG = 2 * np.einsum("...ij,...j->...i", H, g)
    return float(np.max(G - np.sum(gradG * pts, axis=-1)))


def commutator_verify(n: int = 64, f_choice="sin", alpha: float = 0.1, t: float = 1.0):
    """Commutation-relation residuals on a 1D mesh; see ``qhd_lab.commutators``."""
    from qhd_lab.commutators import commutator_verify as _verify

    return _verify(n, f_choice, alpha, t)
