"""Static SVG charts of metric series: optimality gap and success probability."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from qhd_lab.metrics import MetricsSeries


def _label_and_fmin(csv_path: Path):
    man = csv_path.with_name("manifest.json")
    if man.exists():
        meta = json.loads(man.read_text())
        return meta.get("name", csv_path.parent.name), meta.get("objective", {}).get("f_min")
    return csv_path.parent.name or csv_path.stem, None


def plot_series(paths, out):
    """One SVG, two panels (``E[f] - f_min`` on a log axis, success probability).

    Labels and ``f_min`` come from a ``manifest.json`` beside each CSV. Without
    it the raw ``E[f]`` is drawn, on a symmetric-log axis if it is not positive.
    """
    if not paths:
        raise ValueError("no series given; nothing to plot")
    loaded = []
    for p in map(Path, paths):
        series = MetricsSeries.read_csv(p)  # raises SchemaError on a bad header
        label, f_min = _label_and_fmin(p)
        loaded.append((label, f_min, series))

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_f, ax_p) = plt.subplots(1, 2, figsize=(10, 4))
    have_gap = all(fm is not None for _, fm, _ in loaded)
    all_pos = True
    for label, f_min, s in loaded:
        y = s.exp_f - f_min if have_gap else s.exp_f
        if have_gap:
            y = np.maximum(y, 1e-16)
        all_pos &= bool(np.all(y > 0))
        ax_f.plot(s.k, y, label=label)
        ax_p.plot(s.k, s.success_prob, label=label)
    ax_f.set_yscale("log" if all_pos else "symlog")
    ax_f.set_xlabel("iteration k")
    ax_f.set_ylabel("E[f] - f*" if have_gap else "E[f]")
    ax_p.set_xlabel("iteration k")
    ax_p.set_ylabel("success probability")
    ax_p.set_ylim(-0.02, 1.02)
    for ax in (ax_f, ax_p):
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out
