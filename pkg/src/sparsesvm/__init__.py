"""Sparse linear support vector machines.

Hinge-loss classifiers with L2, L1, elastic-net and k-support penalties, an
all-in-one multi-class L1 SVM solved by a dense simplex method, synthetic
data generators, cross-validated model selection and sparsity diagnostics.
"""

from .dataset import Dataset
from .objective import PenaltySpec, Variant
from .solvers import SolverConfig, SolveReport
from .svm import (
    LinearModel,
    MultiClassModel,
    count_nonzero,
    decision_value,
    predict,
    predict_binary,
    predict_multiclass,
    regularization_path,
    train_binary,
    train_l1msvm,
    train_ova,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "LinearModel",
    "MultiClassModel",
    "PenaltySpec",
    "SolveReport",
    "SolverConfig",
    "Variant",
    "count_nonzero",
    "decision_value",
    "predict",
    "predict_binary",
    "predict_multiclass",
    "regularization_path",
    "train_binary",
    "train_l1msvm",
    "train_ova",
]
