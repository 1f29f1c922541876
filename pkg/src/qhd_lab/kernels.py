"""Backend selection for the pointwise kernels.

The compiled Cython module is used when it was built; otherwise the NumPy
fallback is imported. Set ``QHD_LAB_KERNELS=numpy`` to force the fallback.
"""

import os

if os.environ.get("QHD_LAB_KERNELS", "").lower() == "numpy":
    from qhd_lab import _kernels_py as _impl
else:
    try:
        from qhd_lab import _kernels as _impl
    except ImportError:  # extension not built
        from qhd_lab import _kernels_py as _impl

BACKEND = _impl.BACKEND

phase_multiply = _impl.phase_multiply
phase_multiply2 = _impl.phase_multiply2
norm_sq = _impl.norm_sq
weighted_sum = _impl.weighted_sum
observe = _impl.observe
anticommutator_combine = _impl.anticommutator_combine


def threads():
    """Worker cap for transforms, from ``QHD_LAB_THREADS`` (default 1)."""
    raw = os.environ.get("QHD_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"QHD_LAB_THREADS must be an integer, got {raw!r}") from None
    return max(n, 1)
