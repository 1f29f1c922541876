import numpy as np
import pytest

from qhd_lab.analysis import commutator_verify as analysis_verify
from qhd_lab.commutators import (FULL_TOL, VECTOR_TOL, acomm, band_projector, comm, commutator_verify,
                                 gaussian_battery)


def test_all_relations_hold_at_n64():
    rep = commutator_verify(64, "sin", alpha=0.1, t=1.0)
    assert len(rep.results) == 8
    assert rep.passed, rep.table()
    for r in rep.results:
        assert r.tol in (FULL_TOL, VECTOR_TOL, 1e-10)


@pytest.mark.parametrize("f_choice", ["sin", "sin_mix"])
@pytest.mark.parametrize("alpha,t", [(0.1, 1.0), (-0.3, 2.0), (0.0, 0.7)])
def test_relations_hold_across_parameters(f_choice, alpha, t):
    assert commutator_verify(64, f_choice, alpha, t).passed


def test_wrong_derivative_is_detected():
    # a field whose "derivative" is off by 10% must break the relations
    bad = (np.sin, lambda x: 1.1 * np.cos(x), lambda x: -np.sin(x), 1)
    rep = commutator_verify(64, bad)
    assert not rep.passed
    assert len(rep.failures()) >= 4


def test_band_compression_matters():
    # raw full-matrix residuals carry O(1) aliasing at the band edge
    rep = commutator_verify(64, "sin")
    raw = [r.raw_residual for r in rep.results if r.regime == "full" and not np.isnan(r.raw_residual)]
    assert max(raw) > 1e-3


def test_band_projector_is_orthogonal_projector():
    Q = band_projector(16, 2 * np.pi, 5)
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-13)
    np.testing.assert_allclose(Q, Q.conj().T, atol=1e-13)
    assert np.trace(Q).real == pytest.approx(11)


def test_comm_and_acomm():
    a = np.array([[0, 1], [1, 0]], dtype=complex)
    b = np.array([[1, 0], [0, -1]], dtype=complex)
    np.testing.assert_allclose(comm(a, b), [[0, -2], [2, 0]])
    np.testing.assert_allclose(acomm(a, b), 0)


def test_gaussian_battery_columns_are_unit():
    x = np.arange(64) * 2 * np.pi / 64
    B = gaussian_battery(x)
    assert B.shape == (64, 6)
    np.testing.assert_allclose(np.linalg.norm(B, axis=0), 1.0)


def test_limits_and_wrapper():
    with pytest.raises(ValueError):
        commutator_verify(256)
    with pytest.raises(KeyError):
        commutator_verify(32, "tanh")
    assert analysis_verify(64).passed
