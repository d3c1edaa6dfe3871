# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Native kernels for the fused lasso signal approximator.

The total-variation step uses Condat's direct O(n) algorithm; sparsity is
applied afterwards by elementwise soft thresholding.  Each row of the input
is an independent problem, which lets the proximal step of the whole
coefficient matrix run in one call.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _tv1d(const double* y, double* x, Py_ssize_t n, double lam) noexcept nogil:
    cdef Py_ssize_t k, k0, kminus, kplus, m
    cdef double vmin, vmax, umin, umax
    if n == 0:
        return
    if lam <= 0.0 or n == 1:
        for k in range(n):
            x[k] = y[k]
        return
    k = k0 = kminus = kplus = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        if k == n - 1:
            if umin < 0.0:
                for m in range(k0, kminus + 1):
                    x[m] = vmin
                k = k0 = kminus = kminus + 1
                vmin = y[k]
                umin = lam
                umax = y[k] + lam - vmax
            elif umax > 0.0:
                for m in range(k0, kplus + 1):
                    x[m] = vmax
                k = k0 = kplus = kplus + 1
                vmax = y[k]
                umax = -lam
                umin = y[k] - lam - vmin
            else:
                for m in range(k0, n):
                    x[m] = vmin + umin / (k - k0 + 1)
                return
            if k == n - 1:
                x[k] = vmin + umin
                return
            continue
        if y[k + 1] + umin < vmin - lam:
            for m in range(k0, kminus + 1):
                x[m] = vmin
            k = k0 = kminus = kplus = kminus + 1
            vmin = y[k]
            vmax = y[k] + 2.0 * lam
            umin = lam
            umax = -lam
        elif y[k + 1] + umax > vmax + lam:
            for m in range(k0, kplus + 1):
                x[m] = vmax
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


def tv_denoise(cnp.ndarray[double, ndim=1] z, double weight):
    """Exact minimizer of 0.5*||b - z||^2 + weight*sum|b[k+1] - b[k]|."""
    cdef cnp.ndarray[double, ndim=1] y = np.ascontiguousarray(z)
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(y)
    _tv1d(&y[0] if y.shape[0] else NULL, &out[0] if y.shape[0] else NULL,
          y.shape[0], weight)
    return out


def solve_rows(cnp.ndarray[double, ndim=2] Z, double s_sparsity, double s_fusion):
    """Row-wise FLSA: TV-denoise each row, then soft-threshold elementwise."""
    cdef cnp.ndarray[double, ndim=2] Y = np.ascontiguousarray(Z)
    cdef cnp.ndarray[double, ndim=2] out = np.empty_like(Y)
    cdef Py_ssize_t nrow = Y.shape[0], n = Y.shape[1]
    cdef Py_ssize_t r, k
    cdef double v
    if n == 0:
        return out
    with nogil:
        for r in range(nrow):
            _tv1d(&Y[r, 0], &out[r, 0], n, s_fusion)
            if s_sparsity > 0.0:
                for k in range(n):
                    v = out[r, k]
                    if v > s_sparsity:
                        out[r, k] = v - s_sparsity
                    elif v < -s_sparsity:
                        out[r, k] = v + s_sparsity
                    else:
                        out[r, k] = 0.0
    return out
