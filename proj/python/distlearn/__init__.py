"""Training-distribution learning: COAS samplers, size-constrained learners and rank statistics."""

from ._core import (
    ConfigError,
    IncompleteResults,
    explain_clusters,
    f1_macro,
    fcnn1,
    friedman,
    kmeans,
    load_csv,
    load_libsvm,
    make_synthetic,
    mean_ranks,
    oracle_uncertainty,
    random_forest_predict,
    report,
    run_config,
    wilcoxon,
)

__all__ = [
    "ConfigError",
    "IncompleteResults",
    "explain_clusters",
    "f1_macro",
    "fcnn1",
    "friedman",
    "kmeans",
    "load_csv",
    "load_libsvm",
    "make_synthetic",
    "mean_ranks",
    "oracle_uncertainty",
    "random_forest_predict",
    "report",
    "run_config",
    "wilcoxon",
]
