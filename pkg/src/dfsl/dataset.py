"""Multichannel functional data containers, normalization, splitting, CSV IO.

A dataset holds N independent samples observed on a shared, equally spaced
time grid of n points across p channels.  The on-disk interchange format is
long CSV with header ``sample_id,time_index,channel_id,value`` and 0-based
integer time indices.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "FunctionalDataset",
    "NoiseModel",
    "normalize_channels",
    "split",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class FunctionalDataset:
    """Observations ``values[i, k, j]`` for sample i, time k, channel j."""

    values: np.ndarray
    time_points: np.ndarray = None
    channel_names: tuple[str, ...] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise ValueError(f"values must be 3-D (N, n, p), got shape {values.shape}")
        if min(values.shape) < 1:
            raise ValueError(f"all dimensions must be >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        n, p = values.shape[1], values.shape[2]
        tp = self.time_points
        tp = np.arange(n, dtype=float) if tp is None else np.asarray(tp, dtype=float)
        if tp.shape != (n,):
            raise ValueError(f"time_points must have length {n}, got {tp.shape}")
        if n > 1:
            gaps = np.diff(tp)
            if np.any(gaps <= 0):
                raise ValueError("time_points must be strictly increasing")
            mean_gap = gaps.mean()
            if np.abs(gaps - mean_gap).max() > 1e-9 * mean_gap:
                raise ValueError("time grid must be equally spaced")
        names = self.channel_names
        names = tuple(str(j + 1) for j in range(p)) if names is None else tuple(names)
        if len(names) != p:
            raise ValueError(f"channel_names must have length {p}, got {len(names)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time_points", tp)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    @property
    def n_channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class NoiseModel:
    """Per-channel noise scale and temporal autocorrelation.

    ``sigma[j]`` is the noise scale of channel j and ``gamma[j]`` its n x n
    unit-diagonal autocorrelation matrix, so the per-curve noise covariance
    is ``sigma[j]**2 * gamma[j] / n``.
    """

    sigma: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if sigma.ndim != 1:
            raise ValueError(f"sigma must be 1-D, got shape {sigma.shape}")
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise ValueError("sigma entries must be finite and >= 0")
        p = sigma.shape[0]
        if gamma.ndim != 3 or gamma.shape[0] != p or gamma.shape[1] != gamma.shape[2]:
            raise ValueError(
                f"gamma must have shape (p, n, n) with p={p}, got {gamma.shape}")
        if not np.allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-10, rtol=0):
            raise ValueError("each gamma[j] must be symmetric")
        diags = gamma[:, np.arange(gamma.shape[1]), np.arange(gamma.shape[1])]
        if np.abs(diags - 1.0).max() > 1e-10:
            raise ValueError("each gamma[j] must have unit diagonal")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def identity(cls, p: int, n: int, sigma: float = 0.0) -> "NoiseModel":
        return cls(np.full(p, float(sigma)), np.broadcast_to(np.eye(n), (p, n, n)).copy())

    def covariance(self, j: int) -> np.ndarray:
        """Noise covariance ``sigma_j^2 * Gamma_j / n`` of 1-based channel j."""
        n = self.gamma.shape[1]
        return self.sigma[j - 1] ** 2 * self.gamma[j - 1] / n

    @property
    def is_identity(self) -> bool:
        n = self.gamma.shape[1]
        return bool(np.array_equal(self.gamma, np.broadcast_to(np.eye(n), self.gamma.shape)))


def normalize_channels(data: FunctionalDataset) -> FunctionalDataset:
    """Scale every (sample, channel) column to unit Euclidean norm."""
    norms = np.linalg.norm(data.values, axis=1)
    if np.any(norms == 0):
        i, j = np.argwhere(norms == 0)[0]
        raise ValueError(f"zero-norm column at sample {i}, channel {j + 1}")
    return replace(data, values=data.values / norms[:, None, :])


def split(data: FunctionalDataset, n_train: int, seed: int) -> tuple[FunctionalDataset, FunctionalDataset]:
    """Random disjoint train/test split over samples, deterministic in seed."""
    N = data.n_samples
    if not 0 < n_train < N:
        raise ValueError(f"n_train must be in (0, {N}), got {n_train}")
    perm = np.random.default_rng(seed).permutation(N)
    train = replace(data, values=data.values[np.sort(perm[:n_train])])
    test = replace(data, values=data.values[np.sort(perm[n_train:])])
    return train, test


def write_csv(data: FunctionalDataset, path_or_file) -> None:
    """Write long-format CSV ``sample_id,time_index,channel_id,value``."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["sample_id", "time_index", "channel_id", "value"])
        values = data.values
        for i in range(data.n_samples):
            for k in range(data.n_times):
                for j, name in enumerate(data.channel_names):
                    w.writerow([i, k, name, repr(float(values[i, k, j]))])
    finally:
        if own:
            f.close()


def read_csv(path_or_file) -> FunctionalDataset:
    """Read long-format CSV; every (sample, time, channel) cell must be present.

    Samples are ordered by ascending id, channels by first appearance.
    """
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    f = open(path_or_file, "r", newline="") if own else path_or_file
    try:
        rows = list(csv.reader(f))
    finally:
        if own:
            f.close()
    if not rows or rows[0] != ["sample_id", "time_index", "channel_id", "value"]:
        raise ValueError("expected header sample_id,time_index,channel_id,value")
    records = []
    channels: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
        sid, tix, cid, val = row
        if cid not in channels:
            channels[cid] = len(channels)
        records.append((int(sid), int(tix), channels[cid], float(val)))
    if not records:
        raise ValueError("no data rows")
    sample_ids = sorted({r[0] for r in records})
    sample_pos = {s: i for i, s in enumerate(sample_ids)}
    n = max(r[1] for r in records) + 1
    if min(r[1] for r in records) < 0:
        raise ValueError("time_index must be >= 0")
    N, p = len(sample_ids), len(channels)
    values = np.full((N, n, p), np.nan)
    for sid, tix, jc, val in records:
        if not np.isnan(values[sample_pos[sid], tix, jc]):
            raise ValueError(f"duplicate cell sample {sid}, time {tix}")
        values[sample_pos[sid], tix, jc] = val
    if np.isnan(values).any():
        i, k, j = np.argwhere(np.isnan(values))[0]
        raise ValueError(
            f"missing cell sample {sample_ids[i]}, time {k}, "
            f"channel {list(channels)[j]}")
    return FunctionalDataset(values, channel_names=tuple(channels))


def to_csv_string(data: FunctionalDataset) -> str:
    buf = io.StringIO()
    write_csv(data, buf)
    return buf.getvalue()
