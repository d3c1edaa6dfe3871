"""Dynamic functional subspace learning.

Time-varying sparse self-expressive regression over multichannel
functional data: fused-lasso coefficient paths, cross-correlation
change-point detection, per-segment subspace clustering, and smooth
multichannel functional PCA, plus simulators and a benchmark harness.
"""

from .basis import (BasisMatrix, bspline_basis, bspline_design_matrix,
                    fourier_basis, orthogonalize, wavelet_basis)
from .bench import (BenchmarkRow, MetricReport, change_point_metrics,
                    false_subspace_rate, predict, run_benchmark, write_report)
from .changepoint import ChangeScore, DetectionPolicy, detect, score
from .dataset import (FunctionalDataset, NoiseModel, normalize_channels,
                      read_csv, split, write_csv)
from .flsa import BACKEND, flsa_solve, tv_denoise
from .simulate import (GroundTruth, SegmentSpec, SubspaceSpec, generate,
                       model_I, model_II)
from .solver import (ChannelFit, CoefficientPath, PenaltyConfig,
                     dfsl_objective, fit_bcd, fit_channel_dfsl, fit_dfsl,
                     fit_sfsl, lipschitz_constant)
from .subspace import (ClusteringConfig, ClusterEstimate, SegmentModel,
                       SegmentedSubspaceModel, explained_fractions,
                       hierarchical_cluster, infer, procrustes_align,
                       segment_affinity, smooth_mfpca, spectral_cluster,
                       subspace_affinity)
from .tuning import GridSpec, TuningGrid, lambda_max, select

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BasisMatrix",
    "BenchmarkRow",
    "ChangeScore",
    "ChannelFit",
    "ClusterEstimate",
    "ClusteringConfig",
    "CoefficientPath",
    "DetectionPolicy",
    "FunctionalDataset",
    "GridSpec",
    "GroundTruth",
    "MetricReport",
    "NoiseModel",
    "PenaltyConfig",
    "SegmentModel",
    "SegmentSpec",
    "SegmentedSubspaceModel",
    "SubspaceSpec",
    "TuningGrid",
    "bspline_basis",
    "bspline_design_matrix",
    "change_point_metrics",
    "detect",
    "dfsl_objective",
    "explained_fractions",
    "false_subspace_rate",
    "fit_bcd",
    "fit_channel_dfsl",
    "fit_dfsl",
    "fit_sfsl",
    "flsa_solve",
    "fourier_basis",
    "generate",
    "hierarchical_cluster",
    "infer",
    "lambda_max",
    "lipschitz_constant",
    "model_I",
    "model_II",
    "normalize_channels",
    "orthogonalize",
    "predict",
    "procrustes_align",
    "read_csv",
    "run_benchmark",
    "score",
    "segment_affinity",
    "select",
    "smooth_mfpca",
    "spectral_cluster",
    "split",
    "subspace_affinity",
    "tv_denoise",
    "wavelet_basis",
    "write_csv",
    "write_report",
    "__version__",
]
