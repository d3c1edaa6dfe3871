"""Penalty selection on a (rho, lambda0) grid with a BIC-style criterion.

The two penalty weights are reparameterized as lambda1 = rho*lambda0 and
lambda2 = (1-rho)*lambda0.  For each rho, candidate lambda0 values are
log-spaced below the smallest value that zeroes the whole coefficient path;
each cell is fit cold and scored by

    (N*n) * sum_j log(RSS_j / (N*n)) + log(N*n) * sum_j k_j

where RSS_j is the whitened residual sum of squares of channel j and k_j its
number of nonzero coefficient entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FunctionalDataset, NoiseModel
from .solver import PenaltyConfig, _fit_channel_gram, _whitener

__all__ = ["GridSpec", "GridCell", "TuningGrid", "lambda_max", "select"]

_NONZERO_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Search grid: rho candidates and lambda0 count per rho."""

    rho_values: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    n_lambda: int = 10

    def __post_init__(self):
        rhos = tuple(float(r) for r in self.rho_values)
        if not rhos or any(not 0 < r < 1 for r in rhos):
            raise ValueError(f"rho values must lie in (0, 1), got {rhos}")
        if self.n_lambda < 1:
            raise ValueError(f"n_lambda must be >= 1, got {self.n_lambda}")
        object.__setattr__(self, "rho_values", rhos)


@dataclass(frozen=True)
class GridCell:
    rho: float
    lambda0: float
    criterion: float
    n_nonzero: int
    converged: bool


@dataclass(frozen=True)
class TuningGrid:
    cells: tuple[GridCell, ...]


def _channel_grams(data: FunctionalDataset, noise: NoiseModel | None,
                   ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Whitened Gram and data tensors per channel, sharing the identity case."""
    p, n = data.n_channels, data.n_times
    grams, tensors = [], []
    shared_gram = shared_tensor = None
    for j0 in range(p):
        W = _whitener(noise, j0, n)
        if W is None:
            if shared_gram is None:
                shared_tensor = data.values
                shared_gram = np.einsum("ikr,iks->krs", shared_tensor, shared_tensor,
                                        optimize=True)
            grams.append(shared_gram)
            tensors.append(shared_tensor)
        else:
            Yt = np.einsum("uk,ikj->iuj", W, data.values, optimize=True)
            grams.append(np.einsum("ikr,iks->krs", Yt, Yt, optimize=True))
            tensors.append(Yt)
    return grams, tensors


def _all_zero_at(grams: list[np.ndarray], lam0: float, rho: float,
                 tol: float, max_iter: int) -> bool:
    pen = PenaltyConfig.from_lambda0(lam0, rho)
    for j0, G in enumerate(grams):
        values, _, _ = _fit_channel_gram(G, j0, pen.lambda1, pen.lambda2, tol, max_iter)
        if np.abs(values).max() > _NONZERO_TOL:
            return False
    return True


def lambda_max(data: FunctionalDataset, rho: float,
               noise: NoiseModel | None = None, tol: float = 1e-8,
               max_iter: int = 5000) -> float:
    """Smallest lambda0 (within 1%) whose fit is an all-zero path."""
    if not 0 < rho < 1:
        raise ValueError(f"rho must be in (0, 1), got {rho}")
    grams, _ = _channel_grams(data, noise)
    p = data.n_channels
    bound = 0.0
    for j0 in range(p):
        G = grams[j0]
        for r in range(p):
            if r != j0:
                bound = max(bound, float(np.abs(G[:, r, j0]).max()))
    bound /= (1.0 - rho)
    if bound == 0.0:
        return 0.0
    lo, hi = 0.0, bound
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if _all_zero_at(grams, mid, rho, tol, max_iter):
            hi = mid
        else:
            lo = mid
    return hi


def select(data: FunctionalDataset, grid_spec: GridSpec = GridSpec(),
           noise: NoiseModel | None = None, tol: float = 1e-8,
           max_iter: int = 5000) -> tuple[PenaltyConfig, TuningGrid]:
    """Fit every grid cell and return the criterion-minimizing penalties.

    Ties prefer larger lambda0, then larger rho.  Cells that fail to
    converge are recorded but not selected unless no cell converged.
    """
    grams, tensors = _channel_grams(data, noise)
    N, n, p = data.values.shape
    Nn = N * n
    cells = []
    for rho in grid_spec.rho_values:
        l0max = lambda_max(data, rho, noise, tol, max_iter)
        if l0max <= 0:
            candidates = [0.0]
        elif grid_spec.n_lambda == 1:
            candidates = [l0max]
        else:
            candidates = list(np.geomspace(0.01 * l0max, l0max, grid_spec.n_lambda))
        for lam0 in candidates:
            lam1, lam2 = rho * lam0, (1.0 - rho) * lam0
            crit = 0.0
            n_nonzero = 0
            cell_converged = True
            for j0 in range(p):
                values, converged, _ = _fit_channel_gram(
                    grams[j0], j0, lam1, lam2, tol, max_iter)
                cell_converged &= converged
                n_nonzero += int((np.abs(values) > _NONZERO_TOL).sum())
                Yt = tensors[j0]
                resid = Yt[:, :, j0] - np.einsum("ikr,rk->ik", Yt, values,
                                                 optimize=True)
                rss = float((resid ** 2).sum())
                crit += Nn * np.log(max(rss / Nn, 1e-300))
            crit += np.log(Nn) * n_nonzero
            cells.append(GridCell(float(rho), float(lam0), float(crit),
                                  n_nonzero, bool(cell_converged)))
    grid = TuningGrid(tuple(cells))
    eligible = [c for c in cells if c.converged]
    if not eligible:
        detail = "; ".join(
            f"rho={c.rho:g}, lambda0={c.lambda0:g}" for c in cells)
        raise RuntimeError(f"no tuning cell converged: {detail}")
    best = min(eligible, key=lambda c: (c.criterion, -c.lambda0, -c.rho))
    return PenaltyConfig.from_lambda0(best.lambda0, best.rho), grid
