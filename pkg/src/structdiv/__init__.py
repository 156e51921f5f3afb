"""Structure-aware entropies, Bregman divergences and clustering of distributions.

Elements of the support may be similar to one another; a positive definite
similarity matrix ``Z`` carries that structure into entropy, divergence,
Bregman information and k-means.
"""
__version__ = "0.1.0"

from ._accel import HAS_NUMBA, backend
from .clustering import (ClusteringReport, Decomposition, Partition, adjusted_mutual_information,
                         bregman_kmeans, empty_cluster_repair, information_decomposition)
from .errors import NotPositiveDefiniteError, NumericalError, StructDivError, ValidationError
from .measures import (BregmanInformation, PairwiseDissimilarity, all_pairs_jbd_fast, all_pairs_jbd_naive,
                       bregman_information, divergence, divergence_matrix, entropy, entropy_gradient,
                       entropy_hessian, jensen_bregman, ordinariness, surprise)
from .similarity import (DistanceMatrix, Hierarchy, NearestPDResult, SimilarityMatrix, calibrate_tau,
                         is_negative_type, is_positive_definite, lift_psd_to_pd, nearest_pd_similarity,
                         similarity_from_hierarchy, similarity_from_metric, similarity_linear_from_metric)
from .simplex import (Distribution, WeightedEnsemble, floor_to_interior, sample_group_distribution,
                      sample_uniform_simplex, smooth_to_interior, validate_distribution)
from .transport import TransportPlan, all_pairs_wasserstein, wasserstein1

__all__ = [
    "__version__", "HAS_NUMBA", "backend",
    "StructDivError", "ValidationError", "NumericalError", "NotPositiveDefiniteError",
    "Distribution", "WeightedEnsemble", "validate_distribution", "smooth_to_interior", "floor_to_interior",
    "sample_uniform_simplex", "sample_group_distribution",
    "SimilarityMatrix", "DistanceMatrix", "Hierarchy", "NearestPDResult", "is_positive_definite",
    "similarity_from_metric", "similarity_linear_from_metric", "similarity_from_hierarchy", "calibrate_tau",
    "lift_psd_to_pd", "nearest_pd_similarity", "is_negative_type",
    "ordinariness", "surprise", "entropy", "entropy_gradient", "entropy_hessian", "divergence",
    "divergence_matrix", "jensen_bregman", "bregman_information", "BregmanInformation",
    "all_pairs_jbd_naive", "all_pairs_jbd_fast", "PairwiseDissimilarity",
    "information_decomposition", "Decomposition", "Partition", "ClusteringReport", "bregman_kmeans",
    "empty_cluster_repair", "adjusted_mutual_information",
    "TransportPlan", "wasserstein1", "all_pairs_wasserstein",
]
