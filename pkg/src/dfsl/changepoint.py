"""Change-point identification from a fitted coefficient path.

The per-channel score at time k is the l1 jump of the channel's coefficient
vector, c_jk = sum_r |b_jr(t_k) - b_jr(t_{k-1})| for k = 2..n.  A channel
flags k when its score exceeds a multiple of the channel's score standard
deviation; system-level change points are declared either when enough
channels agree (count rule) or when the agreement count itself is an
outlier (sigma rule).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["ChangeScore", "DetectionPolicy", "score", "detect"]


@dataclass(frozen=True)
class DetectionPolicy:
    """Thresholding rules for channel flags and system declarations."""

    channel_multiplier: float = 3.0
    system_rule: str = "count"
    count_threshold: int = 1
    sigma_multiplier: float = 3.0

    def __post_init__(self):
        if self.system_rule not in ("count", "sigma"):
            raise ValueError(f"system_rule must be 'count' or 'sigma', "
                             f"got {self.system_rule!r}")
        if self.channel_multiplier < 0 or self.sigma_multiplier < 0:
            raise ValueError("multipliers must be >= 0")
        if self.count_threshold < 1:
            raise ValueError(f"count_threshold must be >= 1, got {self.count_threshold}")


@dataclass(frozen=True)
class ChangeScore:
    """Scores ``c[j, m]`` for the jump into time k = m + 2 (1-based)."""

    c: np.ndarray
    thresholds: np.ndarray = None
    channel_flags: tuple[tuple[int, ...], ...] = None
    system_counts: np.ndarray = None
    system_change_points: tuple[int, ...] = None


def _path_values(path) -> np.ndarray:
    values = np.asarray(getattr(path, "values", path), dtype=float)
    if values.ndim != 3:
        raise ValueError(f"coefficient path must be 3-D (p, p, n), got {values.shape}")
    return values


def score(path) -> ChangeScore:
    """Per-channel jump scores of a (p, p, n) coefficient path."""
    values = _path_values(path)
    c = np.abs(np.diff(values, axis=2)).sum(axis=1)
    return ChangeScore(c)


def detect(source, policy: DetectionPolicy = DetectionPolicy()) -> ChangeScore:
    """Complete a ChangeScore with flags, counts, and system change points.

    Accepts either a ChangeScore or a coefficient path.  Returned change
    points are 1-based time indices in 2..n; adjacent flagged indices are
    merged to the one with the largest agreement count.
    """
    cs = source if isinstance(source, ChangeScore) else score(source)
    c = cs.c
    p, nm1 = c.shape
    if nm1 >= 2:
        thresholds = policy.channel_multiplier * c.std(axis=1, ddof=1)
    else:
        thresholds = np.zeros(p)
    flagged = c > thresholds[:, None]
    counts = flagged.sum(axis=0)
    if policy.system_rule == "count":
        hits = np.where(counts >= policy.count_threshold)[0]
    else:
        sd = counts.std(ddof=1) if nm1 >= 2 else 0.0
        hits = np.where(counts > policy.sigma_multiplier * sd)[0] if sd > 0 else np.array([], int)
    merged = []
    group: list[int] = []
    for m in hits:
        if group and m == group[-1] + 1:
            group.append(int(m))
        else:
            if group:
                merged.append(group)
            group = [int(m)]
    if group:
        merged.append(group)
    system = tuple(int(g[int(np.argmax(counts[g]))]) + 2 for g in merged)
    channel_flags = tuple(
        tuple(int(m) + 2 for m in np.where(flagged[j])[0]) for j in range(p))
    return replace(cs, thresholds=thresholds, channel_flags=channel_flags,
                   system_counts=counts, system_change_points=system)
