"""Pure-Python fused lasso signal approximator kernels.

Mirror of the native extension with identical semantics; used when the
compiled module is unavailable or when ``DFSL_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import numpy as np


def tv_denoise(z: np.ndarray, weight: float) -> np.ndarray:
    """Exact minimizer of 0.5*||b - z||^2 + weight*sum|b[k+1] - b[k]|.

    Condat's direct algorithm: a single forward pass maintaining lower and
    upper taut-string envelopes, emitting each constant block as soon as its
    level is certain.
    """
    y = np.ascontiguousarray(z, dtype=float)
    n = y.size
    x = np.empty(n)
    if n == 0:
        return x
    if weight <= 0.0 or n == 1:
        x[:] = y
        return x
    lam = weight
    k = k0 = kminus = kplus = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        if k == n - 1:
            if umin < 0.0:
                x[k0:kminus + 1] = vmin
                k = k0 = kminus = kminus + 1
                vmin = y[k]
                umin = lam
                umax = y[k] + lam - vmax
            elif umax > 0.0:
                x[k0:kplus + 1] = vmax
                k = k0 = kplus = kplus + 1
                vmax = y[k]
                umax = -lam
                umin = y[k] - lam - vmin
            else:
                x[k0:] = vmin + umin / (k - k0 + 1)
                return x
            if k == n - 1:
                x[k] = vmin + umin
                return x
            continue
        if y[k + 1] + umin < vmin - lam:
            x[k0:kminus + 1] = vmin
            k = k0 = kminus = kplus = kminus + 1
            vmin = y[k]
            vmax = y[k] + 2.0 * lam
            umin = lam
            umax = -lam
        elif y[k + 1] + umax > vmax + lam:
            x[k0:kplus + 1] = vmax
            k = k0 = kminus = kplus = kplus + 1
            vmin = y[k] - 2.0 * lam
            vmax = y[k]
            umin = lam
            umax = -lam
        else:
            k += 1
            umin += y[k] - vmin
            umax += y[k] - vmax
            if umin >= lam:
                vmin += (umin - lam) / (k - k0 + 1)
                umin = lam
                kminus = k
            if umax <= -lam:
                vmax += (umax + lam) / (k - k0 + 1)
                umax = -lam
                kplus = k


def solve_rows(Z: np.ndarray, s_sparsity: float, s_fusion: float) -> np.ndarray:
    """Row-wise FLSA: TV-denoise each row, then soft-threshold elementwise."""
    Z = np.ascontiguousarray(Z, dtype=float)
    out = np.empty_like(Z)
    for r in range(Z.shape[0]):
        out[r] = tv_denoise(Z[r], s_fusion)
    if s_sparsity > 0.0:
        out = np.sign(out) * np.maximum(np.abs(out) - s_sparsity, 0.0)
    return out
