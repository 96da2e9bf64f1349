"""Separated-representation surrogates for orbit uncertainty propagation."""

__version__ = "0.1.0"

from .als import AlsConfig, FitReport, fit
from .hermite import BasisSpec, eval_basis, eval_factor, hermite_table
from .model import (
    SeparatedRepresentation,
    TrainingSet,
    data_norm,
    evaluate,
    load_model,
    load_training_csv,
    relative_residual,
    save_model,
    save_training_csv,
)
from .sobol import SobolResult, sobol_indices
from .statistics import MomentSummary, analytic_covariance, analytic_mean, analytic_moments, validation_rms

__all__ = [
    "AlsConfig", "BasisSpec", "FitReport", "MomentSummary", "SeparatedRepresentation", "SobolResult",
    "TrainingSet", "analytic_covariance", "analytic_mean", "analytic_moments", "data_norm", "eval_basis",
    "eval_factor", "evaluate", "fit", "hermite_table", "load_model", "load_training_csv", "relative_residual",
    "save_model", "save_training_csv", "sobol_indices", "validation_rms",
]
