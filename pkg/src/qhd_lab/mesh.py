"""Periodic spectral mesh, wave functions and grid expectation values.

Amplitudes follow the probability-per-node convention: ``|amp[i]|**2`` is the
probability mass carried by node ``i``, so a normalized state has
``sum |amp|**2 == 1`` independently of the cell volume.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from qhd_lab import kernels

MIN_POINTS = 8
NORM_TOL = 1e-8


class GridMismatchError(ValueError):
    """Raised when two grid objects that must coincide do not."""


class NormalizationError(ValueError):
    """Raised when an observable is requested from an unnormalized state."""


@dataclass(frozen=True)
class BoxDomain:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) == 0 or len(lo) != len(hi):
            raise ValueError("box corners must be non-empty and of equal dimension")
        if not all(np.isfinite(lo + hi)):
            raise ValueError("box corners must be finite")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def contains(self, x, closed=True) -> bool:
        x = np.asarray(x, dtype=float)
        if closed:
            return bool(np.all(x >= self.lo) and np.all(x <= self.hi))
        return bool(np.all(x > self.lo) and np.all(x < self.hi))

    def shifted(self, offset) -> "BoxDomain":
        off = np.asarray(offset, dtype=float)
        return BoxDomain(tuple(np.asarray(self.lo) + off), tuple(np.asarray(self.hi) + off))

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "BoxDomain":
        return cls((lo,) * dim, (hi,) * dim)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic mesh with ``n`` nodes per axis.

    Node ``i`` on axis ``j`` sits at ``lo[j] + i * (hi[j] - lo[j]) / n``; the
    upper face is identified with the lower one.
    """

    box: BoxDomain
    n: int

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def spacing(self) -> np.ndarray:
        return self.box.widths / self.n

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> list:
        return [lo + np.arange(self.n) * h for lo, h in zip(self.box.lo, self.spacing)]

    @cached_property
    def coords(self) -> list:
        """Per-axis node coordinates broadcast to the full grid shape."""
        return [np.ascontiguousarray(c) for c in np.meshgrid(*self.axes, indexing="ij")]

    def points(self) -> np.ndarray:
        """All nodes as an ``(n**d, d)`` array in C order."""
        return np.stack([c.ravel() for c in self.coords], axis=1)

    @cached_property
    def freqs(self) -> list:
        """Angular wavenumbers per axis, in FFT order (Nyquist at ``-n/2``)."""
        return [2 * np.pi / w * sfft.fftfreq(self.n, 1.0 / self.n) for w in self.box.widths]

    @cached_property
    def deriv_freqs(self) -> list:
        """Wavenumbers for odd-order derivatives: Nyquist mode zeroed."""
        out = []
        for k in self.freqs:
            k = k.copy()
            if self.n % 2 == 0:
                k[self.n // 2] = 0.0
            out.append(k)
        return out

    @cached_property
    def ksq(self) -> np.ndarray:
        """``|k|^2`` on the full spectral grid (Nyquist retained)."""
        total = np.zeros(self.shape)
        for j, k in enumerate(self.freqs):
            total += self._along(k, j) ** 2
        return total

    def _along(self, vec, axis):
        shape = [1] * self.dim
        shape[axis] = self.n
        return vec.reshape(shape)

    def freq_mesh(self) -> list:
        return [np.ascontiguousarray(c) for c in np.meshgrid(*self.freqs, indexing="ij")]


def make_grid(box: BoxDomain, n_per_dim: int) -> Grid:
    if not isinstance(box, BoxDomain):
        raise TypeError("box must be a BoxDomain")
    if int(n_per_dim) != n_per_dim or n_per_dim < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} grid points per axis, got {n_per_dim}")
    if n_per_dim % 2:
        raise ValueError(f"grid size must be even, got {n_per_dim}")
    return Grid(box, int(n_per_dim))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    val: np.ndarray

    def __post_init__(self):
        val = np.ascontiguousarray(np.broadcast_to(np.asarray(self.val, dtype=float), self.grid.shape))
        object.__setattr__(self, "val", val)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "ScalarField":
        """Evaluate ``fn`` on an ``(m, d)`` array of nodes."""
        return cls(grid, np.asarray(fn(grid.points()), dtype=float).reshape(grid.shape))

    def __add__(self, other):
        _check_same(self.grid, other.grid)
        return ScalarField(self.grid, self.val + other.val)

    def __mul__(self, c):
        return ScalarField(self.grid, self.val * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != self.grid.shape:
            amp = amp.reshape(self.grid.shape)
        object.__setattr__(self, "amp", np.ascontiguousarray(amp))

    def norm_sq(self) -> float:
        return kernels.norm_sq(self.amp.ravel())

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amp / np.sqrt(self.norm_sq()))

    def density(self) -> np.ndarray:
        return np.abs(self.amp) ** 2

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amp.copy())


def _check_same(a: Grid, b: Grid):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


def uniform_state(grid: Grid) -> WaveFunction:
    return WaveFunction(grid, np.full(grid.shape, 1.0 / np.sqrt(grid.size), dtype=complex))


def gaussian_state(grid: Grid, center: Sequence[float], sigma: float) -> WaveFunction:
    """Real Gaussian packet with amplitude ``exp(-|x - c|^2 / (4 sigma^2))``.

    The density ``|amp|^2`` then has standard deviation ``sigma`` per axis.
    """
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.shape[0] != grid.dim:
        raise ValueError("center dimension does not match grid")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not grid.box.contains(center):
        raise ValueError(f"center {center} outside box")
    if sigma < 4 * float(np.max(grid.spacing)):
        raise ValueError(f"sigma={sigma} is undersampled: fewer than 4 cells per sigma")
    r2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, center))
    amp = np.exp(-r2 / (4 * sigma**2)).astype(complex)
    amp /= np.sqrt(kernels.norm_sq(amp.ravel()))
    return WaveFunction(grid, amp)


def apply_diagonal_phase(wf: WaveFunction, field: ScalarField, theta: float) -> WaveFunction:
    """Return ``exp(-i theta field) wf``."""
    _check_same(wf.grid, field.grid)
    out = wf.amp.copy()
    kernels.phase_multiply(out.reshape(-1), field.val.reshape(-1), float(theta))
    return WaveFunction(wf.grid, out)


def fft(a, axes=None):
    return sfft.fftn(a, axes=axes, workers=kernels.threads())


def ifft(a, axes=None):
    return sfft.ifftn(a, axes=axes, workers=kernels.threads())


def apply_fourier_phase(wf: WaveFunction, multiplier, theta: float) -> WaveFunction:
    """Return ``F^-1 exp(-i theta m(k)) F wf``.

    ``multiplier`` is either a callable taking the list of per-axis wavenumber
    meshes, or an array already laid out on the spectral grid.
    """
    grid = wf.grid
    if callable(multiplier):
        m = np.asarray(multiplier(grid.freq_mesh()), dtype=float)
    else:
        m = np.asarray(multiplier, dtype=float)
    m = np.ascontiguousarray(np.broadcast_to(m, grid.shape))
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier must be finite on every grid wavenumber")
    spec = fft(wf.amp)
    kernels.phase_multiply(spec.reshape(-1), m.reshape(-1), float(theta))
    return WaveFunction(grid, ifft(spec))


def momentum(amp: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """``-i d/dx_axis`` of a raw amplitude array, spectrally, along one axis."""
    spec = sfft.fft(amp, axis=axis, workers=kernels.threads())
    spec *= grid._along(grid.deriv_freqs[axis], axis)
    return sfft.ifft(spec, axis=axis, workers=kernels.threads())


def partial_derivative(wf: WaveFunction, axis: int) -> WaveFunction:
    """Momentum operator ``p_axis = -i d/dx_axis`` applied to ``wf``.

    The result is generally unnormalized.
    """
    if not 0 <= axis < wf.grid.dim:
        raise IndexError(f"axis {axis} out of range for a {wf.grid.dim}-d grid")
    return WaveFunction(wf.grid, momentum(wf.amp, wf.grid, axis))


def check_normalized(wf: WaveFunction, tol: float = NORM_TOL) -> float:
    nrm = wf.norm_sq()
    if abs(nrm - 1.0) > tol:
        raise NormalizationError(f"state is not normalized: |psi|^2 = {nrm!r}")
    return nrm


def expectation(wf: WaveFunction, field: ScalarField) -> float:
    """``sum_i field_i |amp_i|^2`` for a normalized state."""
    _check_same(wf.grid, field.grid)
    check_normalized(wf)
    return kernels.weighted_sum(wf.amp.reshape(-1), field.val.reshape(-1))
