import pytest

from qhd_lab.classical import NagConfig, SgdmConfig
from qhd_lab.config import ConfigError, parse_config, parse_text, preset_names
from qhd_lab.evolution import HamiltonianParams

GRAD = """\
[experiment]
objective = "cube_wave"
method = "grad_qhd"

[grid]
n = 32

[hamiltonian]
alpha = -0.05
gamma = 5.0
h = 0.02
K = 10
"""


def test_minimal_quantum_config_and_defaults():
    cfg = parse_text(GRAD, "x.toml")
    p = cfg.params
    assert isinstance(p, HamiltonianParams)
    assert (p.alpha, p.gamma, p.h, p.K, p.substeps, p.t0) == (-0.05, 5.0, 0.02, 10, 1, 0.0)
    assert cfg.grid_n == 32 and cfg.seed == 0 and cfg.delta == 1.0
    assert "hamiltonian.beta" in cfg.defaults_applied
    assert "experiment.seed" in cfg.defaults_applied
    assert cfg.with_seed(5).seed == 5 and "experiment.seed" not in cfg.with_seed(5).defaults_applied


def _err(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_text(text, "c.toml")


def test_unknown_key_reports_line():
    _err(GRAD + "bogus = 1\n", r"c\.toml:13: unknown key 'bogus' in \[hamiltonian\]")


def test_unknown_section_reports_line():
    _err(GRAD + "[extras]\nx = 1\n", r"c\.toml:13: unknown section \[extras\]")


def test_type_mismatch_reports_line():
    _err(GRAD.replace("K = 10", 'K = "ten"'), r"c\.toml:12: \[hamiltonian\] K: expected an integer")
    _err(GRAD.replace("n = 32", "n = 32.0"), r"c\.toml:6: \[grid\] n: expected an integer")


def test_missing_required_key():
    _err(GRAD.replace("h = 0.02\n", ""), r"c\.toml:8: missing required key 'h'")
    _err(GRAD.replace('method = "grad_qhd"\n', ""), "missing required key 'method'")


def test_key_not_applying_to_method():
    text = '[experiment]\nobjective = "rastrigin"\nmethod = "nag"\n[classical]\nK = 5\ns0 = 0.1\n'
    _err(text, r"c\.toml:6: \[classical\] s0 does not apply to method 'nag'")


def test_qhd_rejects_gradient_terms():
    text = GRAD.replace('"grad_qhd"', '"qhd"')
    _err(text, r"c\.toml:9: method 'qhd' requires alpha = 0")


def test_semantic_checks():
    _err(GRAD.replace("n = 32", "n = 33"), "even integer")
    _err(GRAD + "[analysis]\nlyapunov = \"E\"\n", "t0 > 0")
    _err(GRAD.replace("t0", "t0") + "t0 = 1.0\n[analysis]\nlyapunov = \"E\"\n", "centered = true")
    _err(GRAD + '[initial_state]\nkind = "gaussian"\n', "needs a center")
    _err(GRAD + '[initial_state]\nkind = "gaussian"\ncenter = [0.0]\n', "2 entries")
    _err(GRAD.replace('"cube_wave"', '"ackley"'), "unknown objective")
    _err("[experiment\n", "c.toml")


def test_classical_params():
    text = '[experiment]\nobjective = "rastrigin"\nmethod = "sgdm"\nseed = 4\n[classical]\nK = 5\nn_runs = 3\n'
    cfg = parse_text(text)
    assert cfg.params == SgdmConfig(K=5, s0=0.01, noise_std=1.0, seed=4)
    assert cfg.n_runs == 3
    text = '[experiment]\nobjective = "rastrigin"\nmethod = "nag"\n[classical]\nK = 5\ny0_zero = true\n'
    assert parse_text(text).params == NagConfig(K=5, s=0.01, seed=0, y0_zero=True)


def test_flow_params():
    text = ('[experiment]\nobjective = "convex_quartic"\nmethod = "ham_flow"\n'
            '[hamiltonian]\nalpha = 0.1\nt0 = 1.0\n[flow]\nx0 = [1.0, 0.5]\nT = 2.0\ndt = 0.1\n')
    cfg = parse_text(text)
    assert cfg.params == (0.1, 0.0, 0.0)
    _err(text.replace("t0 = 1.0", "t0 = 0.0"), "t0 > 0")
    _err(text.replace("[1.0, 0.5]", "[1.0]"), "2 entries")


@pytest.mark.parametrize("name", preset_names())
def test_every_shipped_preset_parses(name):
    cfg = parse_config(name)
    assert cfg.source.endswith(f"{name}.toml")


def test_missing_file():
    with pytest.raises(ConfigError, match="no such config"):
        parse_config("does_not_exist")
