"""Benchmark objectives with analytic gradients and Hessians.

Evaluators are vectorized over leading axes: ``f`` maps ``(..., d) -> (...)``,
``grad`` maps ``(..., d) -> (..., d)`` and ``hess`` maps ``(..., d) -> (..., d, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from qhd_lab.mesh import BoxDomain, Grid, GridMismatchError, ScalarField


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    name: str
    dim: int
    box: BoxDomain
    f: Callable
    grad: Callable
    hess: Callable
    minimizers: tuple = field(default_factory=tuple)
    f_min: float = 0.0
    convex: bool = False

    def __post_init__(self):
        mins = tuple(np.asarray(m, dtype=float).reshape(self.dim) for m in self.minimizers)
        object.__setattr__(self, "minimizers", mins)
        if self.box.dim != self.dim:
            raise ValueError(f"{self.name}: box dimension {self.box.dim} != {self.dim}")

    def value(self, x) -> float:
        return float(self.f(np.asarray(x, dtype=float)))


class Fields(NamedTuple):
    f: ScalarField
    grad: list
    gradnorm_sq: ScalarField


def _separable(g, dg, d2g):
    def f(x):
        x = np.asarray(x, dtype=float)
        return g(x).sum(axis=-1)

    def grad(x):
        return dg(np.asarray(x, dtype=float))

    def hess(x):
        x = np.asarray(x, dtype=float)
        diag = d2g(x)
        out = np.zeros(x.shape + (x.shape[-1],))
        idx = np.arange(x.shape[-1])
        out[..., idx, idx] = diag
        return out

    return f, grad, hess


# Styblinski-Tang, scaled by 0.2. The quadratic term is -16 y^2 on both axes.
_st = _separable(
    lambda x: 0.2 * (x**4 - 16 * x**2 + 5 * x),
    lambda x: 0.2 * (4 * x**3 - 32 * x + 5),
    lambda x: 0.2 * (12 * x**2 - 32),
)

_cw = _separable(
    lambda x: np.cos(np.pi * x) ** 2 + 0.25 * x**4,
    lambda x: -np.pi * np.sin(2 * np.pi * x) + x**3,
    lambda x: -2 * np.pi**2 * np.cos(2 * np.pi * x) + 3 * x**2,
)

_ra = _separable(
    lambda x: x**2 - 10 * np.cos(2 * np.pi * x) + 10,
    lambda x: 2 * x + 20 * np.pi * np.sin(2 * np.pi * x),
    lambda x: 2 + 40 * np.pi**2 * np.cos(2 * np.pi * x),
)


def _micha_terms(x, c, m=20):
    """phi = -sin(x) sin(c x^2)^m and its first two derivatives."""
    u = c * x**2
    du, d2u = 2 * c * x, 2 * c
    su, cu = np.sin(u), np.cos(u)
    b = su**m
    db = m * su ** (m - 1) * cu * du
    d2b = m * (m - 1) * su ** (m - 2) * cu**2 * du**2 - m * su**m * du**2 + m * su ** (m - 1) * cu * d2u
    a, da, d2a = np.sin(x), np.cos(x), -np.sin(x)
    return -(a * b), -(da * b + a * db), -(d2a * b + 2 * da * db + a * d2b)


_MICHA_C = np.array([1 / np.pi, 2 / np.pi])


def _micha_f(x):
    x = np.asarray(x, dtype=float)
    return _micha_terms(x, _MICHA_C)[0].sum(axis=-1)


def _micha_grad(x):
    return _micha_terms(np.asarray(x, dtype=float), _MICHA_C)[1]


def _micha_hess(x):
    x = np.asarray(x, dtype=float)
    diag = _micha_terms(x, _MICHA_C)[2]
    out = np.zeros(x.shape + (2,))
    out[..., 0, 0] = diag[..., 0]
    out[..., 1, 1] = diag[..., 1]
    return out


def _cq_f(x):
    x = np.asarray(x, dtype=float)
    u, w = x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]
    return u**4 / 256 + w**4 / 128


def _cq_grad(x):
    x = np.asarray(x, dtype=float)
    u, w = x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]
    a, b = u**3 / 64, w**3 / 32
    return np.stack([a + b, a - b], axis=-1)


def _cq_hess(x):
    x = np.asarray(x, dtype=float)
    u, w = x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]
    a, b = 3 * u**2 / 64, 3 * w**2 / 32
    out = np.empty(x.shape + (2,))
    out[..., 0, 0] = out[..., 1, 1] = a + b
    out[..., 0, 1] = out[..., 1, 0] = a - b
    return out


# Refined by damped Newton from the rounded published minimizers
# (see refine_minimizer and tests/test_objectives.py).
_ST_X = -2.9035340277711771
_MI_X = (2.2029055201726093, np.pi / 2)
_CW_X = 0.49389506796597808


def _builtin(name):
    if name == "convex_quartic":
        # [-2, 2]^2 keeps the gradient-augmented dynamics resolved on a 128^2
        # mesh; on [-5, 5]^2 the potential kick outruns the Nyquist wavenumber.
        return ObjectiveSpec(name, 2, BoxDomain.cube(-2, 2, 2), _cq_f, _cq_grad, _cq_hess,
                             minimizers=((0.0, 0.0),), f_min=0.0, convex=True)
    if name == "styblinski_tang":
        return ObjectiveSpec(name, 2, BoxDomain.cube(-5, 5, 2), *_st,
                             minimizers=((_ST_X, _ST_X),), f_min=float(_st[0](np.array([_ST_X, _ST_X]))))
    if name == "michalewicz":
        return ObjectiveSpec(name, 2, BoxDomain.cube(0, np.pi, 2), _micha_f, _micha_grad, _micha_hess,
                             minimizers=(_MI_X,), f_min=float(_micha_f(np.array(_MI_X))))
    if name == "cube_wave":
        mins = tuple((sx * _CW_X, sy * _CW_X) for sx in (1, -1) for sy in (1, -1))
        return ObjectiveSpec(name, 2, BoxDomain.cube(-2, 2, 2), *_cw,
                             minimizers=mins, f_min=float(_cw[0](np.array(mins[0]))))
    if name == "rastrigin":
        return ObjectiveSpec(name, 2, BoxDomain.cube(-3, 3, 2), *_ra,
                             minimizers=((0.0, 0.0),), f_min=0.0)
    raise KeyError(f"unknown objective {name!r}; choose from {', '.join(NAMES)}")


NAMES = ("convex_quartic", "styblinski_tang", "michalewicz", "cube_wave", "rastrigin")

_REGISTRY: dict = {}


def get(name: str) -> ObjectiveSpec:
    if name not in _REGISTRY:
        obj = _builtin(name)
        _validate(obj)
        _REGISTRY[name] = obj
    return _REGISTRY[name]


def _validate(obj: ObjectiveSpec):
    for m in obj.minimizers:
        if not obj.box.contains(m):
            raise ValueError(f"{obj.name}: minimizer {m} outside box")
        if obj.value(m) - obj.f_min > 1e-9 * (1 + abs(obj.f_min)):
            raise ValueError(f"{obj.name}: listed minimizer {m} does not attain f_min")
    rep = check_gradient(obj, n_points=100, seed=0)
    if rep.max_grad_dev > 1e-6:
        raise ValueError(f"{obj.name}: analytic gradient disagrees with finite differences ({rep.max_grad_dev:.3g})")


def quadratic(dim: int = 2, half_width: float = 5.0) -> ObjectiveSpec:
    """``f(x) = |x|^2 / 2`` on a centered cube; a convex test objective."""
    def f(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x * x, axis=-1)

    def grad(x):
        return np.array(x, dtype=float)

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(x.shape[-1]), x.shape + (x.shape[-1],)).copy()

    return ObjectiveSpec("quadratic", dim, BoxDomain.cube(-half_width, half_width, dim), f, grad, hess,
                         minimizers=(np.zeros(dim),), f_min=0.0, convex=True)


def sine_1d() -> ObjectiveSpec:
    """``f(x) = sin(x)`` on ``[0, 2 pi)``; periodic, so every field is smooth on the torus."""
    return ObjectiveSpec("sine", 1, BoxDomain((0.0,), (2 * np.pi,)),
                         lambda x: np.sin(np.asarray(x, dtype=float)[..., 0]),
                         lambda x: np.cos(np.asarray(x, dtype=float)),
                         lambda x: -np.sin(np.asarray(x, dtype=float))[..., None],
                         minimizers=((1.5 * np.pi,),), f_min=-1.0)


def slice_1d(obj: ObjectiveSpec, axis: int = 0, at=None) -> ObjectiveSpec:
    """Restrict ``obj`` to the line through ``at`` along ``axis``."""
    at = np.zeros(obj.dim) if at is None else np.asarray(at, dtype=float)

    def lift(x):
        x = np.asarray(x, dtype=float)
        full = np.broadcast_to(at, x.shape[:-1] + (obj.dim,)).copy()
        full[..., axis] = x[..., 0]
        return full

    def f(x):
        return obj.f(lift(x))

    def grad(x):
        return obj.grad(lift(x))[..., axis:axis + 1]

    def hess(x):
        return obj.hess(lift(x))[..., axis:axis + 1, axis:axis + 1]

    box = BoxDomain((obj.box.lo[axis],), (obj.box.hi[axis],))
    xs = np.linspace(box.lo[0], box.hi[0], 4001)[:, None]
    x0 = xs[np.argmin(f(xs))]
    x_star = refine_minimizer(f, grad, hess, x0)
    return ObjectiveSpec(f"{obj.name}[axis{axis}]", 1, box, f, grad, hess,
                         minimizers=(x_star,), f_min=float(f(x_star)), convex=obj.convex)


def refine_minimizer(f, grad, hess, x0, tol=1e-14, max_iter=100):
    """Damped Newton iteration from ``x0`` with backtracking on ``f``."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) <= tol:
            break
        H = hess(x)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        if np.dot(step, g) >= 0:  # not a descent direction
            step = -g
        fx, lam = f(x), 1.0
        while lam > 1e-12 and f(x + lam * step) > fx:
            lam *= 0.5
        if lam <= 1e-12:
            break
        x = x + lam * step
    return x


def eval_fields(obj: ObjectiveSpec, grid: Grid) -> Fields:
    if grid.dim != obj.dim:
        raise GridMismatchError(f"grid dimension {grid.dim} != objective dimension {obj.dim}")
    slack = 1e-9 * obj.box.widths
    if np.any(np.asarray(grid.box.lo) < np.asarray(obj.box.lo) - slack) or np.any(
        np.asarray(grid.box.hi) > np.asarray(obj.box.hi) + slack
    ):
        raise GridMismatchError(f"grid box {grid.box} is not inside the {obj.name} box {obj.box}")
    pts = grid.points()
    fv = np.asarray(obj.f(pts), dtype=float).reshape(grid.shape)
    gv = np.asarray(obj.grad(pts), dtype=float).reshape(grid.shape + (grid.dim,))
    grads = [ScalarField(grid, gv[..., j]) for j in range(grid.dim)]
    gsq = np.zeros(grid.shape)
    for g in grads:
        gsq += g.val * g.val
    return Fields(ScalarField(grid, fv), grads, ScalarField(grid, gsq))


def center(obj: ObjectiveSpec, which_min: int = 0) -> ObjectiveSpec:
    """Translate so that minimizer ``which_min`` sits at the origin with value 0."""
    if not 0 <= which_min < len(obj.minimizers):
        raise IndexError(f"{obj.name} has {len(obj.minimizers)} minimizers, got index {which_min}")
    x_star = obj.minimizers[which_min]
    f_star = obj.value(x_star)
    if not np.any(x_star) and f_star == 0.0:
        return obj

    def f(x):
        return obj.f(np.asarray(x, dtype=float) + x_star) - f_star

    def grad(x):
        return obj.grad(np.asarray(x, dtype=float) + x_star)

    def hess(x):
        return obj.hess(np.asarray(x, dtype=float) + x_star)

    return replace(obj, name=f"{obj.name}_centered", box=obj.box.shifted(-x_star), f=f, grad=grad, hess=hess,
                   minimizers=tuple(m - x_star for m in obj.minimizers), f_min=0.0)


@dataclass
class GradientReport:
    name: str
    n_points: int
    seed: int
    max_grad_dev: float
    max_hess_dev: float


def check_gradient(obj: ObjectiveSpec, n_points: int = 100, seed: int = 0) -> GradientReport:
    """Compare analytic derivatives with central differences at random interior points.

    Deviations are measured as ``|fd - analytic| / max(|analytic|, 1)`` in the
    max norm, so near-stationary points do not inflate the ratio.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    rng = np.random.default_rng(seed)
    lo, w = np.asarray(obj.box.lo), obj.box.widths
    pts = lo + w * (0.05 + 0.9 * rng.random((n_points, obj.dim)))
    steps = 1e-5 * w
    g_dev = h_dev = 0.0
    for x in pts:
        g = obj.grad(x)
        H = obj.hess(x)
        g_fd = np.empty(obj.dim)
        H_fd = np.empty((obj.dim, obj.dim))
        for j in range(obj.dim):
            e = np.zeros(obj.dim)
            e[j] = steps[j]
            g_fd[j] = (obj.f(x + e) - obj.f(x - e)) / (2 * steps[j])
            H_fd[:, j] = (obj.grad(x + e) - obj.grad(x - e)) / (2 * steps[j])
        g_dev = max(g_dev, float(np.max(np.abs(g_fd - g)) / max(np.max(np.abs(g)), 1.0)))
        h_dev = max(h_dev, float(np.max(np.abs(H_fd - H)) / max(np.max(np.abs(H)), 1.0)))
    return GradientReport(obj.name, n_points, seed, g_dev, h_dev)
