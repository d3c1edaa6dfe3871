"""Deterministic basis-function generators: B-spline, Fourier, wavelet.

Each generator returns unit-normalized columns evaluated on an equally
spaced grid; :func:`orthogonalize` turns any of them into an exactly
orthonormal system while preserving span and column order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

__all__ = [
    "BasisMatrix",
    "bspline_design_matrix",
    "bspline_basis",
    "fourier_basis",
    "wavelet_basis",
    "orthogonalize",
]

# QMF filter pairs; g is derived from h by g[k] = (-1)^k h[L-1-k].
_WAVELET_FILTERS = {
    "haar": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "d4": np.array([1 + np.sqrt(3), 3 + np.sqrt(3),
                    3 - np.sqrt(3), 1 - np.sqrt(3)]) / (4 * np.sqrt(2)),
}


@dataclass(frozen=True)
class BasisMatrix:
    """Basis functions as columns: ``columns[k, q]`` is function q at grid point k."""

    columns: np.ndarray
    family: str
    params: dict

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2:
            raise ValueError(f"columns must be 2-D, got shape {cols.shape}")
        object.__setattr__(self, "columns", cols)

    @property
    def n_points(self) -> int:
        return self.columns.shape[0]

    @property
    def n_funcs(self) -> int:
        return self.columns.shape[1]


def _normalized(cols: np.ndarray) -> np.ndarray:
    return cols / np.linalg.norm(cols, axis=0)


def bspline_design_matrix(n_points: int, order: int) -> np.ndarray:
    """Full clamped B-spline design matrix on an equally spaced knot grid.

    Knots at the n_points grid locations in [0, 1], with boundary knots
    repeated to full multiplicity (open uniform knot vector); rows sum to 1.
    """
    if n_points < 2 or order < 1:
        raise ValueError(f"need n_points >= 2 and order >= 1, got {n_points}, {order}")
    x = np.linspace(0.0, 1.0, n_points)
    knots = np.r_[np.zeros(order - 1), x, np.ones(order - 1)]
    return BSpline.design_matrix(x, knots, order - 1, extrapolate=False).toarray()


def bspline_basis(n_points: int, order: int, selected: list[int]) -> BasisMatrix:
    """Selected clamped B-spline basis functions; ``selected`` is 1-based."""
    dm = bspline_design_matrix(n_points, order)
    n_avail = dm.shape[1]
    sel = [int(s) for s in selected]
    for s in sel:
        if not 1 <= s <= n_avail:
            raise ValueError(
                f"selected index {s} outside 1..{n_avail} for n_points={n_points}, "
                f"order={order}")
    cols = _normalized(dm[:, [s - 1 for s in sel]])
    return BasisMatrix(cols, "bspline", {"order": order, "selected": sel})


def fourier_basis(n_points: int, q_max: int) -> BasisMatrix:
    """Cosine columns cos(q*t + q*pi), q = 1..q_max, on [0, 2*pi] inclusive."""
    if q_max < 1:
        raise ValueError(f"q_max must be >= 1, got {q_max}")
    t = np.linspace(0.0, 2.0 * np.pi, n_points)
    cols = np.stack([np.cos(q * t + q * np.pi) for q in range(1, q_max + 1)], axis=1)
    return BasisMatrix(_normalized(cols), "fourier", {"q_max": q_max})


def _dwt_synthesis_column(coef: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Inverse periodized orthogonal DWT of a coefficient vector.

    Layout: [approx (1), detail at coarsest level (1), next level (2), ...].
    """
    L = h.size
    g = np.array([(-1) ** k * h[L - 1 - k] for k in range(L)])
    a = coef[:1].copy()
    pos = 1
    n = coef.size
    while a.size < n:
        d = coef[pos:pos + a.size]
        pos += a.size
        out = np.zeros(2 * a.size)
        m_idx = np.arange(L)
        for k in range(a.size):
            idx = (2 * k + m_idx) % out.size
            np.add.at(out, idx, h * a[k] + g * d[k])
        a = out
    return a


def wavelet_basis(n_points: int, n_funcs: int, family: str = "haar") -> BasisMatrix:
    """First ``n_funcs`` wavelet synthesis vectors (inverse DWT of unit vectors)."""
    if family not in _WAVELET_FILTERS:
        raise ValueError(f"unknown wavelet family {family!r}; "
                         f"choose from {sorted(_WAVELET_FILTERS)}")
    if n_points < 1 or n_points & (n_points - 1):
        raise ValueError(
            f"wavelet synthesis needs a power-of-two length, got {n_points}; "
            f"pad or truncate the grid, or use bspline/fourier families")
    if not 1 <= n_funcs <= n_points:
        raise ValueError(f"n_funcs must be in 1..{n_points}, got {n_funcs}")
    h = _WAVELET_FILTERS[family]
    cols = np.zeros((n_points, n_funcs))
    for q in range(n_funcs):
        e = np.zeros(n_points)
        e[q] = 1.0
        cols[:, q] = _dwt_synthesis_column(e, h)
    return BasisMatrix(_normalized(cols), "wavelet", {"family": family})


def orthogonalize(basis: BasisMatrix) -> BasisMatrix:
    """Gram-Schmidt orthonormalization preserving span and column order."""
    cols = basis.columns
    if cols.shape[1] > cols.shape[0]:
        raise ValueError(f"cannot orthogonalize {cols.shape[1]} columns on "
                         f"{cols.shape[0]} points")
    Q, R = np.linalg.qr(cols)
    rdiag = np.abs(np.diag(R))
    if rdiag.min() <= 1e-10 * max(rdiag.max(), 1.0):
        raise ValueError("columns are rank deficient")
    signs = np.sign(np.diag(R))
    return BasisMatrix(Q * signs, basis.family, dict(basis.params, orthogonalized=True))
