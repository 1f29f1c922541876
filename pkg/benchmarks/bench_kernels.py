"""Compiled kernels vs the NumPy fallback.

Times each pointwise kernel on a 256^2 amplitude array, then one full
gradient-QHD evolution (Styblinski-Tang, N=128, 50 steps) under each backend.
The end-to-end run is done in a subprocess because the backend is fixed at
import time by ``QHD_LAB_KERNELS``.

    python benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qhd_lab import _kernels_py

try:
    from qhd_lab import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

E2E = """
import time
from qhd_lab import kernels, objectives
from qhd_lab.evolution import HamiltonianParams, evolve
from qhd_lab.mesh import make_grid, uniform_state
obj = objectives.get("styblinski_tang")
g = make_grid(obj.box, 128)
p = HamiltonianParams(alpha=-0.05, gamma=5.0, t0=0.0, h=0.01, K=50)
t = time.perf_counter()
_, s = evolve(uniform_state(g), p, obj, observe_every=10)
print(kernels.BACKEND, time.perf_counter() - t, repr(float(s.exp_f[-1])))
"""


def kernel_cases(mod, n=256 * 256, seed=0):
    r = np.random.default_rng(seed)
    amp = r.standard_normal(n) + 1j * r.standard_normal(n)
    f, g = r.standard_normal(n), r.random(n)
    mask = (f > 0).astype(np.uint8)
    out = np.zeros(n, dtype=complex)
    return {
        "phase_multiply": lambda: mod.phase_multiply(amp, f, 1e-3),
        "phase_multiply2": lambda: mod.phase_multiply2(amp, f, 0.5, g, 2.0, 1e-3),
        "norm_sq": lambda: mod.norm_sq(amp),
        "weighted_sum": lambda: mod.weighted_sum(amp, f),
        "observe": lambda: mod.observe(amp, f, g, mask),
        "anticommutator_combine": lambda: mod.anticommutator_combine(out, f, amp, amp, 0.5),
    }


def best_ms(fn, repeat):
    return 1e3 * min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--no-e2e", action="store_true", help="skip the end-to-end evolution timing")
    args = ap.parse_args()

    mods = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])
    if _kernels_c is None:
        print("compiled extension not built; only the NumPy fallback is timed")
    cases = {m.BACKEND: kernel_cases(m) for m in mods}
    names = list(cases["numpy"])
    print(f"{'kernel (256^2 points)':<24}" + "".join(f"{m.BACKEND + ' ms':>12}" for m in mods) + f"{'speedup':>10}")
    for name in names:
        t = [best_ms(cases[m.BACKEND][name], args.repeat) for m in mods]
        speed = f"{t[0] / t[1]:>9.2f}x" if len(t) == 2 else ""
        print(f"{name:<24}" + "".join(f"{v:>12.3f}" for v in t) + speed)

    if args.no_e2e:
        return
    print("\nend-to-end evolution (Styblinski-Tang, N=128, K=50, grad-QHD)")
    results = {}
    for backend in ["numpy"] + (["cython"] if _kernels_c is not None else []):
        env = dict(os.environ, QHD_LAB_KERNELS=backend if backend == "numpy" else "")
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        name, secs, val = out.stdout.split()
        results[name] = (float(secs), float(val))
        print(f"  {name:<8} {float(secs):8.2f} s   final E[f] = {val}")
    if len(results) == 2:
        (a, va), (b, vb) = results["numpy"], results["cython"]
        # reductions sum in a different order, so agreement is to round-off, not bitwise
        print(f"  speedup {a / b:.2f}x; final E[f] relative difference {abs(va - vb) / abs(va):.1e}")


if __name__ == "__main__":
    main()
