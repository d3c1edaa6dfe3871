"""Per-segment subspace recovery from a fitted coefficient path.

Within each stationary segment the averaged absolute coefficients induce a
symmetric channel affinity A = B + B'.  Channels are grouped by spectral or
complete-linkage hierarchical clustering, and each group's segment data is
summarized by a smooth multichannel functional PCA basis: sequential
penalized rank-one extraction with a first-difference roughness penalty,
Gram-Schmidt re-orthogonalization, and a cumulative explained-variance
stopping rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .dataset import FunctionalDataset

__all__ = [
    "ClusteringConfig",
    "ClusterEstimate",
    "SegmentModel",
    "SegmentedSubspaceModel",
    "segment_affinity",
    "spectral_cluster",
    "hierarchical_cluster",
    "smooth_mfpca",
    "explained_fractions",
    "procrustes_align",
    "subspace_affinity",
    "infer",
]

_AFFINITY_EPS = 1e-6
_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class ClusteringConfig:
    """Clustering method for one segment's affinity matrix.

    method "spectral" uses `k` clusters; method "hierarchical" cuts a
    complete-linkage dendrogram at `max_within_distance`.
    """

    method: str = "spectral"
    k: int = 2
    max_within_distance: float = 1.4

    def __post_init__(self):
        if self.method not in ("spectral", "hierarchical"):
            raise ValueError(f"unknown clustering method {self.method!r}")
        if self.method == "spectral" and self.k < 1:
            raise ValueError(f"cluster count must be >= 1, got {self.k}")
        if self.method == "hierarchical" and not self.max_within_distance > 0:
            raise ValueError(
                f"distance threshold must be > 0, got {self.max_within_distance}")


@dataclass(frozen=True)
class ClusterEstimate:
    """One channel cluster within a segment and its extracted basis."""

    cluster_id: int
    channel_ids: tuple[int, ...]
    basis: np.ndarray       # (n_s, d)
    scores: np.ndarray      # (N, p_l, d)
    explained: tuple[float, ...]  # cumulative explained-variance fractions

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        scores = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "scores", scores)
        d = basis.shape[1]
        if scores.shape[2] != d or len(self.explained) != d:
            raise ValueError("basis, scores and explained disagree on the "
                             "number of components")
        if d:
            gram = basis.T @ basis
            if np.abs(gram - np.eye(d)).max() > _ORTHO_TOL:
                raise ValueError("basis columns are not orthonormal")


@dataclass(frozen=True)
class SegmentModel:
    """Affinity, channel assignment and per-cluster bases for one segment."""

    start: int    # first time index of the segment (1-based)
    stop: int     # one past the last time index
    affinity: np.ndarray
    assignment: tuple[int, ...]
    clusters: tuple[ClusterEstimate, ...]

    def __post_init__(self):
        A = np.asarray(self.affinity, dtype=float)
        object.__setattr__(self, "affinity", A)
        object.__setattr__(self, "assignment", tuple(int(c) for c in self.assignment))
        if not 1 <= self.start < self.stop:
            raise ValueError(f"invalid segment [{self.start}, {self.stop})")
        p = A.shape[0]
        if A.shape != (p, p) or not np.array_equal(A, A.T):
            raise ValueError("affinity must be square and symmetric")
        if (A < 0).any() or np.abs(np.diag(A)).max() > 0:
            raise ValueError("affinity must be non-negative with zero diagonal")
        if len(self.assignment) != p:
            raise ValueError("assignment must cover all channels")
        ids = sorted(set(self.assignment))
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"cluster ids must be contiguous from 1, got {ids}")
        if sorted(c.cluster_id for c in self.clusters) != ids:
            raise ValueError("clusters do not match the assignment ids")


@dataclass(frozen=True)
class SegmentedSubspaceModel:
    segments: tuple[SegmentModel, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("at least one segment is required")


# ---------------------------------------------------------------------------
# affinity and clustering


def _path_values(path) -> np.ndarray:
    values = np.asarray(getattr(path, "values", path), dtype=float)
    if values.ndim != 3 or values.shape[0] != values.shape[1]:
        raise ValueError(f"expected a (p, p, n) coefficient array, got shape "
                         f"{values.shape}")
    return values


def segment_affinity(path, segment: tuple[int, int]) -> np.ndarray:
    """Symmetric affinity A = B + B' from mean |coefficients| over a segment."""
    values = _path_values(path)
    n = values.shape[2]
    lo, hi = (int(v) for v in segment)
    if not 1 <= lo < hi <= n + 1:
        raise ValueError(f"segment [{lo}, {hi}) out of range for {n} time points")
    B = np.abs(values[:, :, lo - 1:hi - 1]).mean(axis=2)
    A = B + B.T
    np.fill_diagonal(A, 0.0)
    return A


def _check_affinity(affinity) -> np.ndarray:
    A = np.asarray(affinity, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"affinity must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)) or (A < 0).any():
        raise ValueError("affinity entries must be finite and non-negative")
    if np.abs(A - A.T).max() > 1e-8:
        raise ValueError("affinity must be symmetric")
    return 0.5 * (A + A.T)


def _contiguous_labels(raw) -> tuple[int, ...]:
    """Renumber labels 1..K in order of first appearance."""
    mapping: dict[int, int] = {}
    out = []
    for lab in raw:
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        out.append(mapping[lab])
    return tuple(out)


def _n_components(adjacency: np.ndarray) -> int:
    p = adjacency.shape[0]
    seen = np.zeros(p, dtype=bool)
    count = 0
    for start in range(p):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            for v in np.nonzero(adjacency[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    return count


def _kmeans(points: np.ndarray, k: int, seed: int, n_restarts: int = 20,
            max_sweeps: int = 100) -> np.ndarray:
    """Lloyd's algorithm with seeded restarts; returns the best-inertia labels."""
    rng = np.random.default_rng(seed)
    n = points.shape[0]
    best_labels = None
    best_inertia = np.inf
    for _ in range(n_restarts):
        centers = points[rng.choice(n, size=k, replace=False)].copy()
        labels = np.full(n, -1)
        for _ in range(max_sweeps):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new = d2.argmin(axis=1)
            moved: list[int] = []
            for c in range(k):
                if not (new == c).any():
                    far = d2[np.arange(n), new].copy()
                    far[moved] = -np.inf
                    j = int(far.argmax())
                    new[j] = c
                    moved.append(j)
            if np.array_equal(new, labels):
                break
            labels = new
            for c in range(k):
                members = points[labels == c]
                if len(members):
                    centers[c] = members.mean(axis=0)
        inertia = float(((points - centers[labels]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels.copy()
    return best_labels


def spectral_cluster(affinity, k: int, seed: int = 0) -> tuple[int, ...]:
    """Normalized spectral clustering (Ng-Jordan-Weiss) of an affinity matrix."""
    A = _check_affinity(affinity)
    p = A.shape[0]
    if not 1 <= k <= p:
        raise ValueError(f"cluster count must be in 1..{p}, got {k}")
    n_comp = _n_components(A > 0)
    if n_comp > k:
        warnings.warn(f"affinity graph has {n_comp} connected components but "
                      f"k={k}; assignment may be arbitrary across components",
                      RuntimeWarning, stacklevel=2)
    deg = A.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    lap = A * dinv[:, None] * dinv[None, :]
    _, vecs = np.linalg.eigh(lap)
    U = vecs[:, -k:]
    norms = np.linalg.norm(U, axis=1)
    U = U / np.where(norms > 0, norms, 1.0)[:, None]
    labels = _kmeans(U, k, seed)
    return _contiguous_labels(labels)


def hierarchical_cluster(affinity, max_within_distance: float) -> tuple[int, ...]:
    """Complete-linkage clustering on d = 1/(eps + A), cut at the threshold."""
    if not max_within_distance > 0:
        raise ValueError(
            f"distance threshold must be > 0, got {max_within_distance}")
    A = _check_affinity(affinity)
    p = A.shape[0]
    if p == 1:
        return (1,)
    dist = 1.0 / (_AFFINITY_EPS + A)
    np.fill_diagonal(dist, 0.0)
    Z = linkage(squareform(dist, checks=False), method="complete")
    raw = fcluster(Z, t=max_within_distance, criterion="distance")
    return _contiguous_labels(raw)


# ---------------------------------------------------------------------------
# smooth multichannel functional PCA


def smooth_mfpca(data_segment: np.ndarray, lambda3: float = 1.0,
                 variance_target: float = 0.95,
                 ) -> tuple[np.ndarray, np.ndarray, int]:
    """Sequential penalized rank-one components of a (N, n_s, p_l) tensor.

    Each component alternates score and basis updates, where the basis step
    solves (sum_i ||a_i||^2 I + lambda3 D'D) phi = sum_i R_i a_i with D the
    first-difference matrix, then re-orthogonalizes against earlier
    components and normalizes.  Extraction stops once the cumulative
    explained variance reaches `variance_target`.

    Returns (basis (n_s, d), scores (N, p_l, d), d).
    """
    X = np.asarray(data_segment, dtype=float)
    if X.ndim != 3 or min(X.shape) < 1:
        raise ValueError(f"expected a nonempty (N, n_s, p_l) tensor, got shape "
                         f"{X.shape}")
    if lambda3 < 0:
        raise ValueError(f"lambda3 must be >= 0, got {lambda3}")
    if not 0 < variance_target <= 1:
        raise ValueError(
            f"variance_target must be in (0, 1], got {variance_target}")
    n_samples, n_s, p_l = X.shape
    total = float((X ** 2).sum())
    diff = np.diff(np.eye(n_s), axis=0)
    penalty = lambda3 * (diff.T @ diff)
    residual = X.copy()
    phis: list[np.ndarray] = []
    scores: list[np.ndarray] = []
    explained = 0.0
    q_max = min(n_s, n_samples * p_l)
    for _ in range(q_max):
        if total <= 0 or explained / total >= variance_target - 1e-12:
            break
        cov = np.einsum("iuj,ivj->uv", residual, residual, optimize=True)
        eigvals, eigvecs = np.linalg.eigh(cov)
        if eigvals[-1] <= 1e-14 * max(total, 1.0):
            break
        phi = eigvecs[:, -1]
        converged = False
        for _ in range(10_000):
            alpha = np.einsum("iuj,u->ij", residual, phi, optimize=True)
            denom = float((alpha ** 2).sum())
            if denom <= 1e-300:
                break
            rhs = np.einsum("iuj,ij->u", residual, alpha, optimize=True)
            phi_new = np.linalg.solve(denom * np.eye(n_s) + penalty, rhs)
            for prev in phis:
                phi_new = phi_new - (prev @ phi_new) * prev
            norm = np.linalg.norm(phi_new)
            if norm <= 1e-300:
                break
            phi_new = phi_new / norm
            delta = float(np.abs(phi_new - phi).max())
            phi = phi_new
            if delta < 1e-10:
                converged = True
                break
        if not converged:
            warnings.warn("penalized rank-one alternation did not converge "
                          "after 10000 sweeps; using the best iterate",
                          RuntimeWarning, stacklevel=2)
        if phi[np.abs(phi).argmax()] < 0:
            phi = -phi
        alpha = np.einsum("iuj,u->ij", residual, phi, optimize=True)
        comp_var = float((alpha ** 2).sum())
        if comp_var <= 1e-14 * max(total, 1.0):
            break
        residual = residual - phi[None, :, None] * alpha[:, None, :]
        phis.append(phi)
        scores.append(alpha)
        explained += comp_var
    d = len(phis)
    basis = np.stack(phis, axis=1) if d else np.zeros((n_s, 0))
    score_tensor = (np.stack(scores, axis=2) if d
                    else np.zeros((n_samples, p_l, 0)))
    return basis, score_tensor, d


def explained_fractions(data_segment: np.ndarray, scores: np.ndarray,
                        ) -> tuple[float, ...]:
    """Cumulative explained-variance fractions implied by MFPCA scores."""
    total = float((np.asarray(data_segment, dtype=float) ** 2).sum())
    if total <= 0:
        return tuple(0.0 for _ in range(scores.shape[2]))
    comp = (np.asarray(scores, dtype=float) ** 2).sum(axis=(0, 1))
    return tuple(float(v) for v in np.cumsum(comp) / total)


# ---------------------------------------------------------------------------
# evaluation helpers


def _basis_columns(basis, name: str) -> np.ndarray:
    cols = np.asarray(getattr(basis, "columns", basis), dtype=float)
    if cols.ndim != 2:
        raise ValueError(f"{name} must be a 2-D column matrix, got shape "
                         f"{cols.shape}")
    d = cols.shape[1]
    if d and np.abs(cols.T @ cols - np.eye(d)).max() > 1e-6:
        raise ValueError(f"{name} columns must be orthonormal")
    return cols


def procrustes_align(estimated, truth) -> tuple[np.ndarray, np.ndarray, float]:
    """Best orthogonal column mixing of `estimated` onto `truth`.

    Returns (rotation, aligned, error) where rotation is the d x d orthogonal
    matrix minimizing ||estimated @ rotation - truth||_F.
    """
    est = _basis_columns(estimated, "estimated")
    tru = _basis_columns(truth, "truth")
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    U, _, Vt = np.linalg.svd(est.T @ tru)
    rotation = U @ Vt
    aligned = est @ rotation
    error = float(np.linalg.norm(aligned - tru))
    return rotation, aligned, error


def subspace_affinity(phi_a, phi_b, normalized: bool = False) -> float:
    """||Phi_a' Phi_b||_F; optionally divided by sqrt(max(d_a, d_b))."""
    a = _basis_columns(phi_a, "phi_a")
    b = _basis_columns(phi_b, "phi_b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"bases live on different grids: {a.shape[0]} vs "
                         f"{b.shape[0]} points")
    aff = float(np.linalg.norm(a.T @ b))
    if normalized:
        d = max(a.shape[1], b.shape[1])
        aff = aff / np.sqrt(d) if d else 0.0
    return aff


# ---------------------------------------------------------------------------
# orchestration


def infer(path, change_points, data: FunctionalDataset,
          config: ClusteringConfig = ClusteringConfig(), lambda3: float = 1.0,
          variance_target: float = 0.95, seed: int = 0,
          ) -> SegmentedSubspaceModel:
    """Affinity, clustering and MFPCA for every segment between change points."""
    values = _path_values(path)
    p, _, n = values.shape
    if data.n_channels != p or data.n_times != n:
        raise ValueError("coefficient path and dataset dimensions disagree")
    cps = sorted(int(c) for c in change_points)
    if len(set(cps)) != len(cps) or any(not 2 <= c <= n for c in cps):
        raise ValueError(f"change points must be distinct and in 2..{n}, "
                         f"got {cps}")
    bounds = [1] + cps + [n + 1]
    segments = []
    for s in range(len(bounds) - 1):
        lo, hi = bounds[s], bounds[s + 1]
        affinity = segment_affinity(values, (lo, hi))
        if config.method == "spectral":
            assignment = spectral_cluster(affinity, config.k, seed + s)
        else:
            assignment = hierarchical_cluster(affinity,
                                              config.max_within_distance)
        clusters = []
        for cid in range(1, max(assignment) + 1):
            cols = [j for j in range(p) if assignment[j] == cid]
            seg_data = data.values[:, lo - 1:hi - 1, :][:, :, cols]
            basis, scores, _ = smooth_mfpca(seg_data, lambda3, variance_target)
            clusters.append(ClusterEstimate(
                cluster_id=cid,
                channel_ids=tuple(c + 1 for c in cols),
                basis=basis,
                scores=scores,
                explained=explained_fractions(seg_data, scores)))
        segments.append(SegmentModel(start=lo, stop=hi, affinity=affinity,
                                     assignment=assignment,
                                     clusters=tuple(clusters)))
    return SegmentedSubspaceModel(segments=tuple(segments))
