import json

import pytest

from qhd_lab.cli import main
from qhd_lab.metrics import CSV_HEADER, MetricsSeries

QUANTUM = """\
[experiment]
objective = "styblinski_tang"
method = "grad_qhd"
observe_every = 2

[grid]
n = 32

[hamiltonian]
alpha = -0.05
gamma = 5.0
h = 0.01
K = 6
substeps = 2
"""

NAG = """\
[experiment]
objective = "cube_wave"
method = "nag"
seed = 3

[classical]
K = 20
n_runs = 50
s = {s}
"""


def _cfg(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_quantum_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", _cfg(tmp_path, QUANTUM), "--out", str(out)]) == 0
    assert "grad_qhd:styblinski_tang: 3 rows" in capsys.readouterr().out
    s = MetricsSeries.read_csv(out / "series.csv")
    assert list(s.k) == [2, 4, 6]
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["hamiltonian"]["substeps"] == 2
    assert "hamiltonian.beta" in man["defaults_applied"]
    assert man["versions"]["kernels"] in ("cython", "numpy")
    dens = (out / "final_density.csv").read_text().splitlines()
    assert dens[0] == "x0,x1,prob" and len(dens) == 32 * 32 + 1
    assert sum(float(r.split(",")[2]) for r in dens[1:]) == pytest.approx(1.0, abs=1e-10)


def test_run_is_byte_reproducible(tmp_path):
    cfg = _cfg(tmp_path, NAG.format(s=0.01))
    for d in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/series.csv").read_bytes() == (tmp_path / "b/series.csv").read_bytes()
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "a/series.csv").read_bytes() != (tmp_path / "c/series.csv").read_bytes()
    assert json.loads((tmp_path / "c/manifest.json").read_text())["seeds"]["master_seed"] == 4


def test_failed_run_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "div"
    assert main(["run", "--config", _cfg(tmp_path, NAG.format(s=50.0)), "--out", str(out)]) == 1
    assert "diverged" in capsys.readouterr().err
    assert not out.exists()


def test_config_errors_are_reported(tmp_path, capsys):
    bad = QUANTUM.replace('"grad_qhd"', '"qhd"')
    assert main(["run", "--config", _cfg(tmp_path, bad), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "c.toml:10" in err and "requires alpha = 0" in err
    assert main(["run", "--config", _cfg(tmp_path, QUANTUM + "zeta = 1\n"), "--out", str(tmp_path / "o")]) == 1
    assert "c.toml:15: unknown key 'zeta'" in capsys.readouterr().err


def test_flow_preset_runs(tmp_path):
    out = tmp_path / "flow"
    assert main(["run", "--config", "flow_highres", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["highres_residual_max"] < 1e-4
    assert not (out / "final_density.csv").exists()


def test_plot(tmp_path, capsys):
    cfg = _cfg(tmp_path, NAG.format(s=0.01))
    main(["run", "--config", cfg, "--out", str(tmp_path / "r")])
    svg = tmp_path / "p.svg"
    assert main(["plot", "--out", str(svg), str(tmp_path / "r/series.csv")]) == 0
    assert svg.read_text().lstrip().startswith("<?xml")
    empty = tmp_path / "e.svg"
    assert main(["plot", "--out", str(empty)]) == 1
    assert "nothing to plot" in capsys.readouterr().err
    assert not empty.exists()
    (tmp_path / "bad.csv").write_text("a,b\n")
    assert main(["plot", "--out", str(empty), str(tmp_path / "bad.csv")]) == 1
    assert ",".join(CSV_HEADER) in capsys.readouterr().err


@pytest.mark.parametrize("suite", ["commutators", "splitting", "gradients"])
def test_verify_suites_pass(suite, capsys):
    assert main(["verify", suite]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_list_objectives(capsys):
    assert main(["list-objectives"]) == 0
    out = capsys.readouterr().out
    for name in ("convex_quartic", "styblinski_tang", "michalewicz", "cube_wave", "rastrigin"):
        assert name in out
    assert "0.493895068" in out
