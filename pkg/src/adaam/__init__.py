"""Adaptive affinity matrix metric learning.

Learns a low-rank signed affinity over the data jointly with a linear
projection A, both through plain spectral decompositions, and emits the
Mahalanobis metric M = A @ A.T whose distances are Euclidean distances in
the projected space. Ships a locality-preserving-projection baseline, a
seeded k-means evaluation harness, and a CLI.
"""

from .cluster import (ClusterAssignment, ClusterReport, accuracy, evaluate,
                      kmeans, kmeans_round)
from .core import (AdaamModel, Projection, RankDeficiencyWarning, center,
                   default_neighbors, final_affinity, fit_adaam,
                   intermediate_affinity, load_model, projection_step,
                   save_model, transform)
from .datasets import (DataFormatError, LabeledDataset, load_binary,
                       load_csv, load_dataset, save_binary, save_csv,
                       synth_blobs)
from .estimator import AdaAM, HeatKernelLPP
from .graph import (SparseAffinity, SparsityBudgetWarning,
                    affinity_quadratic, degree, knn_heat_kernel,
                    laplacian_quadratic, sparsify_top_t, top_t_budget)
from .linalg import (EigenPairs, NotPositiveSemidefinite, ThinSvd,
                     generalized_symmetric_eig, numerical_rank,
                     singular_values, symmetric_eig, thin_svd)
from .lpp import LppProjection, lpp, metric_of

__version__ = "0.1.0"

__all__ = [
    "AdaAM",
    "AdaamModel",
    "ClusterAssignment",
    "ClusterReport",
    "DataFormatError",
    "EigenPairs",
    "HeatKernelLPP",
    "LabeledDataset",
    "LppProjection",
    "NotPositiveSemidefinite",
    "Projection",
    "RankDeficiencyWarning",
    "SparseAffinity",
    "SparsityBudgetWarning",
    "ThinSvd",
    "accuracy",
    "affinity_quadratic",
    "center",
    "default_neighbors",
    "degree",
    "evaluate",
    "final_affinity",
    "fit_adaam",
    "generalized_symmetric_eig",
    "intermediate_affinity",
    "kmeans",
    "kmeans_round",
    "knn_heat_kernel",
    "laplacian_quadratic",
    "load_binary",
    "load_csv",
    "load_dataset",
    "load_model",
    "lpp",
    "metric_of",
    "numerical_rank",
    "projection_step",
    "save_binary",
    "save_csv",
    "save_model",
    "singular_values",
    "sparsify_top_t",
    "symmetric_eig",
    "synth_blobs",
    "thin_svd",
    "top_t_budget",
    "transform",
    "__version__",
]
