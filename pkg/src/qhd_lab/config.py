"""Experiment configuration files: ``[section]`` headers with ``key = value`` lines.

The syntax is a TOML subset. Every semantic error (unknown key, missing key,
wrong type, a section that does not apply to the chosen method) names the
file and line it comes from.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from qhd_lab import objectives

METHODS = ("grad_qhd", "qhd", "nag", "sgdm", "ham_flow")
QUANTUM = ("grad_qhd", "qhd")
CLASSICAL = ("nag", "sgdm")
REQUIRED = object()

PRESET_DIR = Path(__file__).with_name("presets")


class ConfigError(ValueError):
    pass


# section -> key -> (kind, default, methods the key applies to or None for all)
SCHEMA: dict = {
    "experiment": {
        "objective": ("objective", REQUIRED, None),
        "method": ("method", REQUIRED, None),
        "seed": ("int", 0, None),
        "observe_every": ("int", 1, None),
        "output_dir": ("str", "", None),
    },
    "analysis": {
        "delta": ("float", 1.0, None),
        "centered": ("bool", False, None),
        "lyapunov": (("none", "E", "F"), "none", QUANTUM),
    },
    "grid": {
        "n": ("int", 128, QUANTUM),
    },
    "hamiltonian": {
        "alpha": ("float", 0.0, QUANTUM + ("ham_flow",)),
        "beta": ("float", 0.0, QUANTUM + ("ham_flow",)),
        "gamma": ("float", 0.0, QUANTUM + ("ham_flow",)),
        "t0": ("float", 0.0, QUANTUM + ("ham_flow",)),
        "h": ("float", REQUIRED, QUANTUM),
        "K": ("int", REQUIRED, QUANTUM),
        "substeps": ("int", 1, QUANTUM),
        "lanczos_tol": ("float", 1e-10, QUANTUM),
    },
    "initial_state": {
        "kind": (("uniform", "gaussian"), "uniform", QUANTUM),
        "center": ("floats", None, QUANTUM),
        "sigma": ("float", 1.0, QUANTUM),
    },
    "classical": {
        "K": ("int", REQUIRED, CLASSICAL),
        "n_runs": ("int", 1000, CLASSICAL),
        "s": ("float", 0.01, ("nag",)),
        "y0_zero": ("bool", False, ("nag",)),
        "s0": ("float", 0.01, ("sgdm",)),
        "noise_std": ("float", 1.0, ("sgdm",)),
    },
    "flow": {
        "x0": ("floats", REQUIRED, ("ham_flow",)),
        "p0": ("floats", None, ("ham_flow",)),
        "T": ("float", REQUIRED, ("ham_flow",)),
        "dt": ("float", REQUIRED, ("ham_flow",)),
        "form": (("printed", "legendre"), "printed", ("ham_flow",)),
        "s": ("float", None, ("ham_flow",)),
    },
}


@dataclass
class ExperimentConfig:
    objective: str
    method: str
    values: dict
    source: str = "<memory>"
    defaults_applied: list = field(default_factory=list)

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return self.values["experiment"]["seed"]

    @property
    def grid_n(self) -> Optional[int]:
        return self.values.get("grid", {}).get("n")

    @property
    def delta(self) -> float:
        return self.values["analysis"]["delta"]

    @property
    def observe_every(self) -> int:
        return self.values["experiment"]["observe_every"]

    @property
    def n_runs(self) -> Optional[int]:
        return self.values.get("classical", {}).get("n_runs")

    @property
    def output_dir(self) -> str:
        return self.values["experiment"]["output_dir"]

    @property
    def params(self):
        """HamiltonianParams, SgdmConfig or NagConfig, depending on the method."""
        from qhd_lab.classical import NagConfig, SgdmConfig
        from qhd_lab.evolution import HamiltonianParams

        if self.method in QUANTUM:
            hm = self.values["hamiltonian"]
            return HamiltonianParams(hm["alpha"], hm["beta"], hm["gamma"], hm["t0"], hm["h"], hm["K"],
                                     hm["substeps"])
        if self.method == "nag":
            c = self.values["classical"]
            return NagConfig(K=c["K"], s=c["s"], seed=self.seed, y0_zero=c["y0_zero"])
        if self.method == "sgdm":
            c = self.values["classical"]
            return SgdmConfig(K=c["K"], s0=c["s0"], noise_std=c["noise_std"], seed=self.seed)
        hm = self.values["hamiltonian"]
        return hm["alpha"], hm["beta"], hm["gamma"]

    def objective_spec(self):
        obj = objectives.get(self.objective)
        if self.values["analysis"]["centered"]:
            obj = objectives.center(obj)
        return obj

    def with_seed(self, seed: int) -> "ExperimentConfig":
        values = {s: dict(kv) for s, kv in self.values.items()}
        values["experiment"]["seed"] = int(seed)
        applied = [d for d in self.defaults_applied if d != "experiment.seed"]
        return ExperimentConfig(self.objective, self.method, values, self.source, applied)

    def to_dict(self) -> dict:
        return {s: dict(kv) for s, kv in self.values.items()}


def _line_index(text: str) -> dict:
    """``(section, key) -> line`` and ``(section, None) -> header line``."""
    index = {}
    section = ""
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_\-]+)\s*\]", line)
        if m:
            section = m.group(1)
            index.setdefault((section, None), n)
            continue
        m = re.match(r"^([A-Za-z0-9_\-]+)\s*=", line)
        if m:
            index.setdefault((section, m.group(1)), n)
    return index


def _coerce(kind, value, where):
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a real number, got {value!r}")
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if kind == "floats":
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{where}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if kind == "objective":
        if value not in objectives.NAMES:
            raise ConfigError(f"{where}: unknown objective {value!r}; choose from {', '.join(objectives.NAMES)}")
        return value
    if kind == "method":
        if value not in METHODS:
            raise ConfigError(f"{where}: unknown method {value!r}; choose from {', '.join(METHODS)}")
        return value
    if isinstance(kind, tuple):
        if value not in kind:
            raise ConfigError(f"{where}: expected one of {', '.join(map(str, kind))}, got {value!r}")
        return value
    raise AssertionError(kind)


def parse_text(text: str, source: str = "<memory>") -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)

    def at(section, key=None):
        n = lines.get((section, key)) or lines.get((section, None))
        return f"{source}:{n}" if n else source

    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"{at(section)}: unknown section [{section}]; expected one of "
                              f"{', '.join('[' + s + ']' for s in SCHEMA)}")
        if not isinstance(body, dict):
            raise ConfigError(f"{at('', section)}: top-level key {section!r}; keys must live in a [section]")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{at(section, key)}: unknown key {key!r} in [{section}]; expected one of "
                                  f"{', '.join(SCHEMA[section])}")

    exp = raw.get("experiment", {})
    for key in ("objective", "method"):
        if key not in exp:
            raise ConfigError(f"{at('experiment')}: missing required key {key!r} in [experiment]")
    method = _coerce("method", exp["method"], f"{at('experiment', 'method')}: [experiment] method")

    values: dict = {}
    applied = []
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        relevant = {k: spec for k, spec in keys.items() if spec[2] is None or method in spec[2]}
        for key in given:
            if key not in relevant:
                raise ConfigError(f"{at(section, key)}: [{section}] {key} does not apply to method {method!r}")
        if not relevant:
            continue
        out = {}
        for key, (kind, default, _) in relevant.items():
            if key in given:
                out[key] = _coerce(kind, given[key], f"{at(section, key)}: [{section}] {key}")
            elif default is REQUIRED:
                raise ConfigError(f"{at(section)}: missing required key {key!r} in [{section}] "
                                  f"for method {method!r}")
            else:
                out[key] = default
                applied.append(f"{section}.{key}")
        values[section] = out

    cfg = ExperimentConfig(values["experiment"]["objective"], method, values, source, applied)
    _check_semantics(cfg, at)
    return cfg


def _check_semantics(cfg: ExperimentConfig, at):
    v = cfg.values
    if v["experiment"]["observe_every"] < 1:
        raise ConfigError(f"{at('experiment', 'observe_every')}: observe_every must be >= 1")
    if v["analysis"]["delta"] <= 0:
        raise ConfigError(f"{at('analysis', 'delta')}: delta must be positive")
    obj = objectives.get(cfg.objective)
    if cfg.method == "qhd":
        hm = v["hamiltonian"]
        for key in ("alpha", "beta", "gamma"):
            if hm[key] != 0.0:
                raise ConfigError(f"{at('hamiltonian', key)}: method 'qhd' requires {key} = 0 "
                                  f"(got {hm[key]}); use method 'grad_qhd' for the gradient terms")
    if cfg.method in QUANTUM:
        n = v["grid"]["n"]
        if n < 8 or n % 2:
            raise ConfigError(f"{at('grid', 'n')}: grid n must be an even integer >= 8, got {n}")
        hm = v["hamiltonian"]
        if hm["h"] <= 0 or hm["K"] < 1 or hm["t0"] < 0 or hm["substeps"] < 1:
            raise ConfigError(f"{at('hamiltonian')}: need h > 0, K >= 1, t0 >= 0, substeps >= 1")
        if hm["t0"] == 0 and v["analysis"]["lyapunov"] != "none":
            raise ConfigError(f"{at('hamiltonian', 't0')}: Lyapunov tracking needs t0 > 0")
        if v["analysis"]["lyapunov"] != "none" and not v["analysis"]["centered"]:
            raise ConfigError(f"{at('analysis', 'lyapunov')}: Lyapunov tracking needs centered = true")
        st = v["initial_state"]
        if st["kind"] == "gaussian":
            if st["center"] is None:
                raise ConfigError(f"{at('initial_state')}: gaussian initial state needs a center")
            if len(st["center"]) != obj.dim:
                raise ConfigError(f"{at('initial_state', 'center')}: center must have {obj.dim} entries")
    if cfg.method in CLASSICAL:
        c = v["classical"]
        if c["K"] < 1 or c["n_runs"] < 1:
            raise ConfigError(f"{at('classical')}: need K >= 1 and n_runs >= 1")
    if cfg.method == "ham_flow":
        fl = v["flow"]
        if v["hamiltonian"]["t0"] <= 0:
            raise ConfigError(f"{at('hamiltonian', 't0')}: the classical flow needs t0 > 0")
        if len(fl["x0"]) != obj.dim or (fl["p0"] is not None and len(fl["p0"]) != obj.dim):
            raise ConfigError(f"{at('flow')}: x0 and p0 must have {obj.dim} entries")
        if fl["dt"] <= 0 or fl["T"] <= v["hamiltonian"]["t0"]:
            raise ConfigError(f"{at('flow')}: need dt > 0 and T > t0")


def parse_config(path) -> ExperimentConfig:
    """Parse a config file; a bare name that is not a file resolves to a shipped preset."""
    p = Path(path)
    if not p.exists():
        cand = PRESET_DIR / f"{p.name}.toml"
        if p.parent == Path(".") and cand.exists():
            p = cand
        else:
            raise ConfigError(f"{path}: no such config file or shipped preset")
    return parse_text(p.read_text(), str(p))


def preset_names():
    return sorted(q.stem for q in PRESET_DIR.glob("*.toml"))
