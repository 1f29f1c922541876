import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhd_lab.mesh import (BoxDomain, GridMismatchError, NormalizationError, ScalarField, WaveFunction,
                          apply_diagonal_phase, apply_fourier_phase, check_normalized, expectation,
                          gaussian_state, make_grid, partial_derivative, uniform_state)


def test_box_validation():
    with pytest.raises(ValueError):
        BoxDomain((0.0,), (0.0,))
    with pytest.raises(ValueError):
        BoxDomain((0.0, 0.0), (1.0,))
    with pytest.raises(ValueError):
        BoxDomain((0.0,), (np.inf,))
    b = BoxDomain.cube(-1, 2, 3)
    assert b.dim == 3 and np.allclose(b.widths, 3)
    assert b.contains([2, 2, -1]) and not b.contains([2, 2, -1], closed=False)
    assert b.shifted([1, 0, 0]).lo == (0.0, -1.0, -1.0)


def test_grid_nodes_are_periodic():
    g = make_grid(BoxDomain.cube(-2, 2, 2), 8)
    np.testing.assert_allclose(g.axes[0], -2 + 0.5 * np.arange(8))
    assert g.points().shape == (64, 2)
    assert g.cell_volume == pytest.approx(0.25)
    # C order: second coordinate varies fastest
    np.testing.assert_allclose(g.points()[1], [-2.0, -1.5])


@pytest.mark.parametrize("n", [6, 7, 9, 8.5])
def test_make_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        make_grid(BoxDomain.cube(0, 1, 1), n)


def test_frequencies_and_nyquist():
    g = make_grid(BoxDomain((0.0,), (2 * np.pi,)), 8)
    np.testing.assert_allclose(g.freqs[0], [0, 1, 2, 3, -4, -3, -2, -1])
    assert g.deriv_freqs[0][4] == 0.0
    assert g.ksq[4] == 16.0


def test_momentum_of_plane_wave(sine_grid):
    x = sine_grid.axes[0]
    for k in (-3, 0, 5):
        wf = WaveFunction(sine_grid, np.exp(1j * k * x))
        np.testing.assert_allclose(partial_derivative(wf, 0).amp, k * wf.amp, atol=1e-12)


def test_momentum_zeroes_nyquist(sine_grid):
    x = sine_grid.axes[0]
    wf = WaveFunction(sine_grid, np.exp(1j * 16 * x))
    np.testing.assert_allclose(partial_derivative(wf, 0).amp, 0, atol=1e-12)


def test_fourier_phase_free_propagation(sine_grid):
    x = sine_grid.axes[0]
    wf = WaveFunction(sine_grid, (np.exp(2j * x) + np.exp(-5j * x)) / np.sqrt(2 * 32))
    out = apply_fourier_phase(wf, lambda ks: ks[0] ** 2, 0.3)
    want = (np.exp(2j * x - 0.3j * 4) + np.exp(-5j * x - 0.3j * 25)) / np.sqrt(64)
    np.testing.assert_allclose(out.amp, want, atol=1e-14)
    with pytest.raises(ValueError):
        apply_fourier_phase(wf, np.where(sine_grid.freqs[0] == 0, np.inf, 1.0), 0.1)


def test_diagonal_phase_and_expectation(sine_grid):
    wf = uniform_state(sine_grid)
    f = ScalarField.from_function(sine_grid, lambda p: np.cos(p[:, 0]) ** 2)
    out = apply_diagonal_phase(wf, f, 0.7)
    np.testing.assert_allclose(np.abs(out.amp), np.abs(wf.amp))
    assert expectation(wf, f) == pytest.approx(0.5, abs=1e-14)


def test_gaussian_state_normalized_and_moments():
    g = make_grid(BoxDomain.cube(-4, 4, 2), 64)
    wf = gaussian_state(g, (0.5, -0.25), 0.5)
    assert wf.norm_sq() == pytest.approx(1.0, abs=1e-14)
    p = wf.density()
    assert np.sum(p * g.coords[0]) == pytest.approx(0.5, abs=1e-10)
    var = np.sum(p * (g.coords[1] + 0.25) ** 2)
    assert var == pytest.approx(0.25, rel=1e-8)


def test_gaussian_state_rejections():
    g = make_grid(BoxDomain.cube(-1, 1, 1), 16)
    with pytest.raises(ValueError, match="undersampled"):
        gaussian_state(g, (0.0,), 0.1)
    with pytest.raises(ValueError, match="outside"):
        gaussian_state(g, (3.0,), 0.5)


def test_normalization_and_grid_mismatch(sine_grid):
    with pytest.raises(NormalizationError):
        check_normalized(WaveFunction(sine_grid, np.ones(32)))
    other = make_grid(BoxDomain((0.0,), (1.0,)), 32)
    with pytest.raises(GridMismatchError):
        expectation(uniform_state(sine_grid), ScalarField(other, np.ones(32)))


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_phase_operators_are_unitary(theta, seed):
    g = make_grid(BoxDomain.cube(-1, 1, 2), 16)
    r = np.random.default_rng(seed)
    wf = WaveFunction(g, r.standard_normal(g.shape) + 1j * r.standard_normal(g.shape)).normalized()
    f = ScalarField(g, r.standard_normal(g.shape))
    assert apply_diagonal_phase(wf, f, theta).norm_sq() == pytest.approx(1.0, abs=1e-12)
    assert apply_fourier_phase(wf, g.ksq, theta).norm_sq() == pytest.approx(1.0, abs=1e-12)
