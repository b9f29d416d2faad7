"""Coreset selection on precomputed embeddings with CDS diversity constraints."""

from .cds import (
    BetaUnattainableError,
    CdsRelation,
    cds_histogram,
    cds_relation,
    cds_signatures,
    class_centroid,
    histogram_records,
    psi_count,
    signature_groups,
    suggest_beta,
)
from .constraints import (
    BudgetAllocation,
    Stage1Clusters,
    allocate_even,
    allocate_proportional,
    hard_cds_select,
    per_class_budget,
    soft_craig_select,
    soft_graphcut_select,
    stage1_cluster,
)
from .harness import (
    ExperimentConfig,
    MixtureSpec,
    brute_force_facility_opt,
    brute_force_kcenter_opt,
    gen_gaussian_mixture,
    nearest_centroid_accuracy,
    rectified_embedding,
    run_experiment,
    split_mixture,
    strategy_more_dcds,
    strategy_more_random,
    strategy_more_scds,
)
from .pipeline import Budget, ConfigError, SelectorConfig, run_analysis, run_selection
from .reduce import PcaModel, ReducedFeatures, fit_pca, select_dimensions
from .selectors import (
    SimilarityMatrix,
    gradient_proxy,
    pairwise_distances,
    select_craig,
    select_graphcut,
    select_kcenter,
    select_least_confidence,
    select_moderate,
    select_random,
    similarity_matrix,
)
from .tensorio import (
    Coreset,
    Dataset,
    DatasetValidationError,
    TensorFormatError,
    load_dataset,
    read_coreset,
    read_tensor,
    write_coreset,
    write_tensor,
)

__version__ = "0.1.0"
