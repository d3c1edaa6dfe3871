"""Synthetic segmented-subspace data generators.

Each segment draws, per subspace, a channel-mixing matrix V with orthonormal
rows and per-sample coefficient rows r ~ N(0, coeff_cov); the noiseless
signal is X = basis @ (R V).  Channels are scaled by a deterministic
constant making the expected squared norm of every full-length channel equal
to one, so the within-segment linear dependence between channels of a
subspace is preserved exactly.  Gaussian noise with per-segment temporal
autocorrelation and pointwise variance sigma^2/n is added on top.

Random streams are split hierarchically (sample, then segment, then
subspace), so enlarging the sample count leaves earlier samples bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisMatrix, bspline_basis, fourier_basis, orthogonalize, wavelet_basis
from .dataset import FunctionalDataset, NoiseModel

__all__ = [
    "SubspaceSpec",
    "SegmentSpec",
    "GroundTruth",
    "generate",
    "model_I",
    "model_II",
]


@dataclass(frozen=True)
class SubspaceSpec:
    """One subspace inside a segment: basis, member channels, coefficient law."""

    basis: BasisMatrix
    channel_ids: tuple[int, ...]
    n_patterns: int
    coeff_cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.coeff_cov, dtype=float)
        m = self.n_patterns
        if cov.shape != (m, m):
            raise ValueError(f"coeff_cov must be ({m}, {m}), got {cov.shape}")
        if m > self.basis.n_funcs:
            raise ValueError(
                f"n_patterns {m} exceeds basis width {self.basis.n_funcs}")
        object.__setattr__(self, "coeff_cov", cov)
        object.__setattr__(self, "channel_ids", tuple(int(c) for c in self.channel_ids))


@dataclass(frozen=True)
class SegmentSpec:
    """A time segment: its length and the subspaces partitioning the channels."""

    length: int
    subspaces: tuple[SubspaceSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "subspaces", tuple(self.subspaces))
        ids = [c for sub in self.subspaces for c in sub.channel_ids]
        p = len(ids)
        if sorted(ids) != list(range(1, p + 1)):
            raise ValueError(f"channel_ids must partition 1..{p}, got {sorted(ids)}")
        for sub in self.subspaces:
            if sub.basis.n_points != self.length:
                raise ValueError(
                    f"basis has {sub.basis.n_points} points for segment of "
                    f"length {self.length}")
            if sub.basis.n_funcs > self.length:
                raise ValueError("basis width exceeds segment length")

    @property
    def n_channels(self) -> int:
        return sum(len(s.channel_ids) for s in self.subspaces)


@dataclass(frozen=True)
class GroundTruth:
    """Everything the generator knows: breaks, memberships, bases, clean signal."""

    change_points: tuple[int, ...]
    assignment: tuple[tuple[int, ...], ...]
    bases: tuple[tuple[BasisMatrix, ...], ...]
    signal: np.ndarray
    mixing: tuple[tuple[np.ndarray, ...], ...]
    channel_scales: np.ndarray
    noise: NoiseModel


def _gamma_matrix(gamma, ns: int) -> np.ndarray:
    if gamma is None:
        return np.eye(ns)
    if callable(gamma):
        g = np.asarray(gamma(ns), dtype=float)
        if g.shape != (ns, ns):
            raise ValueError(f"gamma callable returned shape {g.shape}, want ({ns}, {ns})")
        return g
    lags = np.abs(np.subtract.outer(np.arange(ns), np.arange(ns)))
    return float(gamma) ** lags


def generate(specs, n_samples: int, sigma: float, gamma, seed: int,
             ) -> tuple[FunctionalDataset, GroundTruth]:
    """Draw a segmented-subspace dataset and its ground truth.

    ``gamma`` sets the within-segment noise autocorrelation: ``None`` for
    white noise, a float a for a^|u-v| decay, or a callable ns -> (ns, ns)
    matrix.
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("need at least one segment")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    p = specs[0].n_channels
    for spec in specs:
        if spec.n_channels != p:
            raise ValueError("all segments must cover the same channel count")
    n = sum(spec.length for spec in specs)
    starts = np.cumsum([0] + [spec.length for spec in specs])[:-1]

    root = np.random.SeedSequence(seed)
    struct_ss, *sample_ss = root.spawn(n_samples + 1)
    struct = np.random.default_rng(struct_ss)

    # structure: orthonormal-row mixing V per (segment, subspace)
    mixing = []
    for spec in specs:
        per_seg = []
        for sub in spec.subspaces:
            m, pl = sub.n_patterns, len(sub.channel_ids)
            raw = struct.standard_normal((m, pl))
            Q, R = np.linalg.qr(raw.T)
            V = (Q * np.sign(np.diag(R))).T
            per_seg.append(V)
        mixing.append(tuple(per_seg))
    mixing = tuple(mixing)

    # deterministic channel scales: E||X_ij||^2 = 1 over the full grid
    scale_sq = np.zeros(p)
    for s, spec in enumerate(specs):
        for l, sub in enumerate(spec.subspaces):
            V = mixing[s][l]
            d = sub.basis.n_funcs
            contrib = d * np.einsum("uj,uv,vj->j", V, sub.coeff_cov, V)
            for pos, cid in enumerate(sub.channel_ids):
                scale_sq[cid - 1] += contrib[pos]
    if np.any(scale_sq <= 0):
        bad = int(np.argmax(scale_sq <= 0)) + 1
        raise ValueError(f"channel {bad} has zero expected power")
    scales = np.sqrt(scale_sq)

    chols = {}
    for spec in specs:
        if spec.length not in chols:
            chols[spec.length] = np.linalg.cholesky(_gamma_matrix(gamma, spec.length))

    X = np.zeros((n_samples, n, p))
    E = np.zeros((n_samples, n, p))
    noise_scale = sigma / np.sqrt(n)
    for i in range(n_samples):
        seg_ss = sample_ss[i].spawn(len(specs))
        for s, spec in enumerate(specs):
            sl = slice(starts[s], starts[s] + spec.length)
            children = seg_ss[s].spawn(len(spec.subspaces) + 1)
            for l, sub in enumerate(spec.subspaces):
                rng = np.random.default_rng(children[l])
                m, d = sub.n_patterns, sub.basis.n_funcs
                Lc = np.linalg.cholesky(sub.coeff_cov)
                R = (Lc @ rng.standard_normal((m, d))).T
                cols = [c - 1 for c in sub.channel_ids]
                X[i, sl, cols] = (sub.basis.columns @ (R @ mixing[s][l])).T
            if sigma > 0:
                rng = np.random.default_rng(children[-1])
                E[i, sl, :] = noise_scale * (
                    chols[spec.length] @ rng.standard_normal((spec.length, p)))
    X /= scales

    gamma_full = np.zeros((n, n))
    for s, spec in enumerate(specs):
        sl = slice(starts[s], starts[s] + spec.length)
        gamma_full[sl, sl] = _gamma_matrix(gamma, spec.length)
    noise = NoiseModel(np.full(p, float(sigma)), np.broadcast_to(gamma_full, (p, n, n)).copy())

    assignment = tuple(
        tuple(l + 1 for _, l in sorted(
            (cid, l) for l, sub in enumerate(spec.subspaces) for cid in sub.channel_ids))
        for spec in specs)
    truth = GroundTruth(
        change_points=tuple(int(s) + 1 for s in starts[1:]),
        assignment=assignment,
        bases=tuple(tuple(sub.basis for sub in spec.subspaces) for spec in specs),
        signal=X,
        mixing=mixing,
        channel_scales=scales,
        noise=noise,
    )
    return FunctionalDataset(X + E), truth


_AR_COEFF_COV = 0.5 ** np.abs(np.subtract.outer(np.arange(2), np.arange(2)))


def _segment(length: int, families: list[str], first_channel: int = 1,
             wavelet_family: str = "haar") -> SegmentSpec:
    subs = []
    cid = first_channel
    for fam in families:
        if fam == "bspline":
            basis = orthogonalize(bspline_basis(length, order=3, selected=[1, 4, 7]))
        elif fam == "fourier":
            basis = orthogonalize(fourier_basis(length, q_max=3))
        else:
            basis = orthogonalize(wavelet_basis(length, 3, wavelet_family))
        subs.append(SubspaceSpec(basis, tuple(range(cid, cid + 4)), 2, _AR_COEFF_COV))
        cid += 4
    return SegmentSpec(length, tuple(subs))


def model_I(n_samples: int, sigma: float, seed: int,
            ) -> tuple[FunctionalDataset, GroundTruth]:
    """Two segments of 20 points, 8 channels: B-spline and Fourier subspaces
    of 4 channels each, with a cross-correlation break at time 21."""
    specs = [_segment(20, ["bspline", "fourier"]) for _ in range(2)]
    return generate(specs, n_samples, sigma, 0.2, seed)


def model_II(n_samples: int, sigma: float, seed: int, wavelet_family: str = "haar",
             ) -> tuple[FunctionalDataset, GroundTruth]:
    """Segments of 32/32/64 points, 12 channels: B-spline, Fourier, and
    wavelet subspaces of 4 channels each, with breaks at times 33 and 65."""
    specs = [_segment(ns, ["bspline", "fourier", "wavelet"],
                      wavelet_family=wavelet_family) for ns in (32, 32, 64)]
    return generate(specs, n_samples, sigma, 0.2, seed)
