"""Fused lasso signal approximator (FLSA): the proximal subproblem

    min_b  0.5*||b - z||^2 + s_sparsity*||b||_1 + s_fusion*||Db||_1

with D the first-order difference matrix.  The solver exploits the exact
decomposition prox = soft_threshold(tv_denoise(z, s_fusion), s_sparsity).

Two interchangeable backends provide the kernels: a compiled extension and a
pure-Python mirror.  The compiled one is preferred; set ``DFSL_PURE_PYTHON=1``
to force the pure backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _py_impl

if os.environ.get("DFSL_PURE_PYTHON") == "1":
    _impl = _py_impl
    BACKEND = "python"
else:
    try:
        from dfsl._native import _flsa as _impl

        BACKEND = "native"
    except ImportError:
        _impl = _py_impl
        BACKEND = "python"

__all__ = ["BACKEND", "flsa_solve", "tv_denoise", "solve_rows"]


def _check_weight(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be finite and >= 0, got {value}")
    return value


def tv_denoise(z: np.ndarray, weight: float) -> np.ndarray:
    """Exact 1-D total-variation denoising of ``z`` with the given weight.

    Output is piecewise constant and mean-preserving.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"z must be 1-D, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite values")
    weight = _check_weight("weight", weight)
    return _impl.tv_denoise(z, weight)


def flsa_solve(z: np.ndarray, s_sparsity: float, s_fusion: float) -> np.ndarray:
    """Global minimizer of the fused lasso signal approximator at ``z``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"z must be 1-D, got shape {z.shape}")
    if z.size < 1:
        raise ValueError("z must have length >= 1")
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite values")
    s_sparsity = _check_weight("s_sparsity", s_sparsity)
    s_fusion = _check_weight("s_fusion", s_fusion)
    return _impl.solve_rows(z[None, :], s_sparsity, s_fusion)[0]


def solve_rows(Z: np.ndarray, s_sparsity: float, s_fusion: float) -> np.ndarray:
    """Row-batched :func:`flsa_solve`; each row is an independent problem."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError(f"Z must be 2-D, got shape {Z.shape}")
    s_sparsity = _check_weight("s_sparsity", s_sparsity)
    s_fusion = _check_weight("s_fusion", s_fusion)
    return _impl.solve_rows(Z, s_sparsity, s_fusion)
