"""Acceptance suite: one PASS/FAIL line per criterion.

Expected values come from independent oracles computed in the tests
themselves (dense exponentials, finite sums on a finer mesh, closed-form
iterates), never from the implementation under test. Tolerances are the
acceptance thresholds.
"""

import time

import numpy as np
import pytest
import scipy.linalg

from qhd_lab import objectives
from qhd_lab.classical import (FORMS, ClassicalState, NagConfig, SgdmConfig, ensemble, ham_flow_rk4,
                               highres_residual, matched_parameters, nag_run)
from qhd_lab.commutators import commutator_verify
from qhd_lab.config import parse_config
from qhd_lab.evolution import mixed_step_lanczos, spectral_matrices
from qhd_lab.mesh import gaussian_state, make_grid, uniform_state
from qhd_lab.objectives import eval_fields
from qhd_lab.runner import run_classical, run_quantum
from qhd_lab import verify
from tests.acceptance_log import report


def _preset(name):
    cfg = parse_config(name)
    start = time.perf_counter()
    if cfg.method in ("grad_qhd", "qhd"):
        series, _, _ = run_quantum(cfg)
    else:
        series, _, _ = run_classical(cfg)
    return series, time.perf_counter() - start


@pytest.fixture(scope="module")
def styblinski():
    return {m: _preset(f"styblinski_{m}") for m in ("gradqhd", "qhd")}


@pytest.fixture(scope="module")
def cube_wave():
    return {m: _preset(f"cube_wave_{m}")[0] for m in ("gradqhd", "qhd", "nag", "sgdm")}


@pytest.fixture(scope="module")
def lyapunov_runs():
    obj, grid, sE, _ = verify.lyapunov_run(verify.LYAP_E, "E")
    _, _, sF, _ = verify.lyapunov_run(verify.LYAP_F, "F")
    return obj, grid, sE, sF


def test_criterion_01_unitarity(styblinski):
    series, wall = styblinski["gradqhd"]
    drift = series.meta["max_norm_drift"]
    ok = drift <= 1e-8 and wall < 300 and len(series) > 0
    assert report(1, "unitarity, Styblinski-Tang preset", ok,
                  f"max | |psi|^2 - 1 | = {drift:.2e} (<= 1e-8), wall {wall:.0f} s (< 300 s)")


def test_criterion_02_commutators():
    rep = commutator_verify(64, "sin", alpha=0.1, t=1.0)
    worst_full = max(r.residual for r in rep.results if r.regime == "full")
    worst_vec = max(r.residual for r in rep.results if r.regime == "vectors")
    assert report(2, "commutator relations, N=64, f=sin", rep.passed,
                  f"{len(rep.results)} relations, worst full {worst_full:.1e} (<= 1e-8), "
                  f"worst vector {worst_vec:.1e} (<= 1e-6)")


def test_criterion_03_splitting_oracle():
    errs = verify.splitting_errors()
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    e = verify.convex_slice_error(h=1e-3)
    ok = all(3.5 <= r <= 4.5 for r in ratios) and e <= 5e-6
    assert report(3, "split step vs dense exponential", ok,
                  f"Richardson ratios {ratios[0]:.4f}, {ratios[1]:.4f} (in [3.5, 4.5]); "
                  f"error at h=1e-3 {e:.2e} (<= 5e-6)")


def test_criterion_04_lanczos_mixed_step():
    obj = objectives.sine_1d()
    g = make_grid(obj.box, 32)
    fields = eval_fields(obj, g)
    P, _ = spectral_matrices(g)
    V = np.diag(fields.grad[0].val)
    M = 0.5 * (P @ V + V @ P)
    states = [gaussian_state(g, (np.pi,), 0.8), uniform_state(g),
              gaussian_state(g, (2.0,), 0.8)]
    worst = 0.0
    for wf in states:
        for h in (0.01, 0.1, 1.0):
            want = scipy.linalg.expm(-1j * h * M) @ wf.amp
            got, _ = mixed_step_lanczos(wf, h, fields.grad, tol=1e-12, substeps=True)
            worst = max(worst, float(np.linalg.norm(got.amp - want)))
    assert report(4, "Lanczos mixed step vs dense exp(-ih {P,V}/2)", worst <= 1e-8,
                  f"max error {worst:.2e} (<= 1e-8) over 3 states x 3 step sizes")


def test_criterion_05_lyapunov_monotonicity(lyapunov_runs):
    from qhd_lab.analysis import convex_G_violation, monotonicity_check

    obj, grid, sE, sF = lyapunov_runs
    E = sE.column("lyapunov")
    viol_E = monotonicity_check(list(zip(sE.t, E)), 1e-3)
    gap = float(np.max(sE.exp_f - E / sE.t**2))
    g_viol = convex_G_violation(obj, grid)
    viol_F = monotonicity_check(list(zip(sF.t, sF.column("lyapunov"))), 1e-3)
    ok = not viol_E and gap <= 0 and g_viol <= 0 and not viol_F
    assert report(5, "Lyapunov monotonicity, centered convex quartic", ok,
                  f"E violations {len(viol_E)}, max(E[f] - E/t^2) {gap:.3e} (<= 0), "
                  f"node check max(G - grad G.x) {g_viol:.1e} (<= 0), F violations {len(viol_F)}")


def test_criterion_06_rate_envelope(lyapunov_runs):
    from qhd_lab.analysis import rate_fit

    _, _, sE, _ = lyapunov_runs
    slope = rate_fit(list(zip(sE.t, sE.exp_f)), (2.0, 5.0))
    assert report(6, "log-log slope of E[f] on t in [2, 5]", slope <= -1.5, f"slope {slope:.3f} (<= -1.5)")


def test_criterion_07_convex_ordering():
    runs = {m: _preset(f"convex_{m}")[0] for m in ("gradqhd", "qhd", "nag", "sgdm")}
    finals = {m: float(s.exp_f[-1]) for m, s in runs.items()}
    g = runs["gradqhd"]
    monotone = bool(np.all(np.diff(g.exp_f) < 0))
    ok = monotone and all(finals["gradqhd"] < finals[m] for m in ("qhd", "nag", "sgdm")) and g.k[-1] == 25
    detail = ", ".join(f"{m} {v:.3e}" for m, v in finals.items())
    assert report(7, "convex quartic, E[f] at k=25", ok,
                  f"{detail}; grad-QHD curve strictly decreasing: {monotone}")


def test_criterion_08_nonconvex_ordering(styblinski, cube_wave):
    fin = {m: float(s.exp_f[-1]) for m, s in cube_wave.items()}
    ratio = fin["gradqhd"] / fin["qhd"]
    cw_ok = ratio <= 0.5 and fin["gradqhd"] <= 0.1 * fin["nag"] and fin["gradqhd"] <= 0.1 * fin["sgdm"]
    p_grad = float(styblinski["gradqhd"][0].success_prob[-1])
    p_qhd = float(styblinski["qhd"][0].success_prob[-1])
    ok = cw_ok and p_grad >= p_qhd
    assert report(8, "non-convex ordering", ok,
                  f"Cube-Wave final E[f] grad-QHD {fin['gradqhd']:.4f}, QHD {fin['qhd']:.4f} "
                  f"(ratio {ratio:.2f} <= 0.5), NAG {fin['nag']:.4f}, SGDM {fin['sgdm']:.4f} (grad <= 0.1x each); "
                  f"Styblinski-Tang success grad-QHD {p_grad:.4f} >= QHD {p_qhd:.4f}")


def test_criterion_09_classical_baselines():
    x1 = float(nag_run(objectives.quadratic(1), NagConfig(K=1, s=0.01), [1.0]).iterates[1, 0])
    cfg = SgdmConfig(K=100)
    eta1, etaK = float(cfg.eta(1)), float(cfg.eta(100))
    obj = objectives.get("styblinski_tang")
    same = all(
        ensemble(m, obj, 1000, 2024, c).to_csv() == ensemble(m, obj, 1000, 2024, c).to_csv()
        for m, c in (("nag", NagConfig(K=100)), ("sgdm", SgdmConfig(K=100)))
    )
    ok = x1 == 0.99 and eta1 == 0.504 and etaK == 0.9 and same
    assert report(9, "classical baselines", ok,
                  f"NAG x1 = {x1!r} (0.99), SGDM eta_1 = {eta1!r} (0.504), eta_K = {etaK!r} (0.9), "
                  f"1000-run ensembles bit-identical: {same}")


def test_criterion_10_flow_and_highres_residual():
    q = objectives.quadratic(2)
    st = ClassicalState([1.0, -0.5], [0.3, 0.2], 1.0)
    ratios = []
    for form in FORMS:
        ref = ham_flow_rk4(q, 0.1, 0.05, 0.5, st, 3.0, 1e-4, form=form).X[-1]
        e = [np.linalg.norm(ham_flow_rk4(q, 0.1, 0.05, 0.5, st, 3.0, dt, form=form).X[-1] - ref)
             for dt in (0.1, 0.05, 0.025)]
        ratios += [e[0] / e[1], e[1] / e[2]]
    rk_ok = all(14.5 <= r <= 17.5 for r in ratios)

    obj = objectives.get("convex_quartic")
    s, a = 0.01, 0.1
    b, g = matched_parameters(s, a)
    x0 = ClassicalState([1.5, -1.0], [0.0, 0.0], 1.0)
    dts = (0.02, 0.01, 0.005, 0.0025)
    matched = [highres_residual(ham_flow_rk4(obj, a, b, g, x0, 6.0, dt, form="legendre"), obj, s).max()
               for dt in dts]
    control = [highres_residual(ham_flow_rk4(obj, a, 0.0, 0.2, x0, 6.0, dt, form="legendre"), obj, s).max()
               for dt in dts]
    res_ok = (all(matched[i] / matched[i + 1] > 3.5 for i in range(3)) and matched[-1] < 1e-5
              and min(control) > 0.1 and control[0] / control[-1] < 1.5)
    assert report(10, "RK4 order and high-resolution residual", rk_ok and res_ok,
                  f"RK4 halving ratios {', '.join(f'{r:.2f}' for r in ratios)} (~16); matched residual "
                  f"{', '.join(f'{m:.1e}' for m in matched)} -> 0; unmatched control "
                  f"{', '.join(f'{c:.3f}' for c in control)} stays O(1)")


def _midpoint_success(obj, m=1024, delta=1.0):
    lo, hi = np.asarray(obj.box.lo), np.asarray(obj.box.hi)
    axes = [lo[j] + (np.arange(m) + 0.5) * (hi[j] - lo[j]) / m for j in range(obj.dim)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    return float(np.mean(obj.f(X) - obj.f_min <= delta))


def test_criterion_11_quadrature():
    from qhd_lab.analysis import observables

    rg = objectives.get("rastrigin")
    exp_rg = observables(uniform_state(make_grid(rg.box, 128)), rg).exp_f
    devs = {}
    for name in objectives.NAMES:
        obj = objectives.get(name)
        rec = observables(uniform_state(make_grid(obj.box, 128)), obj, 1.0)
        devs[name] = rec.success_prob - _midpoint_success(obj)
    ok = abs(exp_rg - 26.0) <= 1e-3 and all(abs(d) <= 1e-3 for d in devs.values())
    assert report(11, "uniform-state quadrature, N=128", ok,
                  f"Rastrigin E[f] = {exp_rg:.5f} (26 +- 1e-3); success-probability deviation from "
                  f"1024^2 midpoint oracle max {max(abs(d) for d in devs.values()):.1e} (<= 1e-3)")
