"""Execute an ExperimentConfig and write its artifacts."""

from __future__ import annotations

import json
import platform
import shutil
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from qhd_lab import kernels
from qhd_lab.analysis import bound_constants, lyapunov_report
from qhd_lab.classical import ClassicalState, ensemble, ham_flow_rk4, highres_residual
from qhd_lab.config import CLASSICAL, QUANTUM, ExperimentConfig
from qhd_lab.evolution import evolve
from qhd_lab.mesh import gaussian_state, make_grid, uniform_state
from qhd_lab.metrics import MetricsSeries, Record

SERIES_FILE = "series.csv"
MANIFEST_FILE = "manifest.json"
DENSITY_FILE = "final_density.csv"


def versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"qhd_lab": pkg, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "kernels": kernels.BACKEND}


def initial_state(cfg: ExperimentConfig, grid):
    st = cfg.values["initial_state"]
    if st["kind"] == "uniform":
        return uniform_state(grid)
    return gaussian_state(grid, st["center"], st["sigma"])


def run_quantum(cfg: ExperimentConfig):
    obj = cfg.objective_spec()
    params = cfg.params
    grid = make_grid(obj.box, cfg.grid_n)
    wf0 = initial_state(cfg, grid)
    lyap = cfg.values["analysis"]["lyapunov"]
    lyap = None if lyap == "none" else lyap
    wf, series = evolve(wf0, params, obj, cfg.observe_every, delta=cfg.delta, lyapunov=lyap,
                        tol=cfg.values["hamiltonian"]["lanczos_tol"])
    extra = {}
    if lyap is not None:
        consts = bound_constants(wf0, obj, params, params.t0)
        rep = lyapunov_report(series, lyap, constants=consts)
        extra["lyapunov"] = {"which": lyap, "violations": rep.violations, "K0": consts.K0, "D0": consts.D0,
                             "D0prime": consts.D0prime}
    return series, wf, extra


def run_classical(cfg: ExperimentConfig):
    obj = cfg.objective_spec()
    series = ensemble(cfg.method, obj, cfg.n_runs, cfg.seed, cfg.params, delta=cfg.delta,
                      observe_every=cfg.observe_every)
    return series, None, {}


def run_flow(cfg: ExperimentConfig):
    obj = cfg.objective_spec()
    alpha, beta, gamma = cfg.params
    hm, fl = cfg.values["hamiltonian"], cfg.values["flow"]
    p0 = fl["p0"] if fl["p0"] is not None else [0.0] * obj.dim
    traj = ham_flow_rk4(obj, alpha, beta, gamma, ClassicalState(fl["x0"], p0, hm["t0"]), fl["T"], fl["dt"],
                        form=fl["form"])
    fv = obj.f(traj.X)
    gsq = np.sum(obj.grad(traj.X) ** 2, axis=-1)
    series = MetricsSeries(delta=cfg.delta, f_min=obj.f_min, meta={"aborted": traj.aborted})
    n = len(traj) - 1
    for k in range(1, n + 1):
        if k % cfg.observe_every == 0 or k == n:
            ok = float(fv[k] - obj.f_min <= cfg.delta)
            series.append(Record(k, float(traj.t[k]), float(fv[k]), float(gsq[k]), ok))
    extra = {}
    if fl["s"] is not None and len(traj) >= 3:
        extra["highres_residual_max"] = float(np.max(highres_residual(traj, obj, fl["s"])))
    return series, None, extra


def density_csv(wf) -> str:
    pts = wf.grid.points().reshape(-1, wf.grid.dim)
    prob = wf.density().reshape(-1)
    head = ",".join([f"x{j}" for j in range(wf.grid.dim)] + ["prob"])
    rows = [head]
    for p, q in zip(pts, prob):
        rows.append(",".join(format(float(v), ".17g") for v in (*p, q)))
    return "\n".join(rows) + "\n"


def execute(cfg: ExperimentConfig, out_dir, write_density: bool = True) -> dict:
    """Run ``cfg`` and write series.csv, manifest.json and (quantum) final_density.csv.

    Files written before a failure are removed, as is ``out_dir`` itself if
    this call created it.
    """
    out = Path(out_dir)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        start = time.perf_counter()
        if cfg.method in QUANTUM:
            series, wf, extra = run_quantum(cfg)
        elif cfg.method in CLASSICAL:
            series, wf, extra = run_classical(cfg)
        else:
            series, wf, extra = run_flow(cfg)
        wall = time.perf_counter() - start
        p = out / SERIES_FILE
        written.append(p)
        series.write_csv(p)
        if wf is not None and write_density:
            p = out / DENSITY_FILE
            written.append(p)
            p.write_text(density_csv(wf))
        obj = cfg.objective_spec()
        manifest = {
            "name": f"{cfg.method}:{obj.name}",
            "config_source": cfg.source,
            "config": cfg.to_dict(),
            "defaults_applied": cfg.defaults_applied,
            "seeds": {"master_seed": cfg.seed},
            "objective": {"name": obj.name, "f_min": obj.f_min, "box": [list(obj.box.lo), list(obj.box.hi)]},
            "versions": versions(),
            "rows": len(series),
            "series_meta": series.meta,
            "wall_time_s": wall,
            **extra,
        }
        p = out / MANIFEST_FILE
        written.append(p)
        p.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return manifest
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created:
            shutil.rmtree(out, ignore_errors=True)
        raise


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
