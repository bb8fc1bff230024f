"""Kernel partial least squares regression for peptide QSAR modeling."""

from .dataset import Dataset, ScalingParams, load_table, scale_apply, scale_fit, write_table
from .descriptors import (
    MolGraph,
    SimilMatrix,
    class_score,
    rad_autocorrelation,
    simil_expand,
    topological_distances,
)
from .errors import ConfigError, DataError, DegeneracyError, EarlyStopWarning, SearchFailure
from .kernels import KernelSpec, cross_kernel_matrix, kernel_eval, kernel_matrix
from .kpls import KplsModel, fit_kpls, kpls_predict, load_model, pls_fit, save_model
from .selection import CvResult, SearchConfig, loo_cv, optimize_eta, r_squared, search_hyperparameters

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CvResult",
    "DataError",
    "Dataset",
    "DegeneracyError",
    "EarlyStopWarning",
    "KernelSpec",
    "KplsModel",
    "MolGraph",
    "ScalingParams",
    "SearchConfig",
    "SearchFailure",
    "SimilMatrix",
    "class_score",
    "cross_kernel_matrix",
    "fit_kpls",
    "kernel_eval",
    "kernel_matrix",
    "kpls_predict",
    "load_model",
    "load_table",
    "loo_cv",
    "optimize_eta",
    "pls_fit",
    "r_squared",
    "rad_autocorrelation",
    "save_model",
    "scale_apply",
    "scale_fit",
    "search_hyperparameters",
    "simil_expand",
    "topological_distances",
    "write_table",
]
