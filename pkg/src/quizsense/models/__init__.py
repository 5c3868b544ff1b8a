"""Nine-classifier zoo with seeded grid search and a portable model format."""

from .base import (
    DECISION_THRESHOLD,
    STANDARDIZED_KINDS,
    DatasetSplit,
    InvalidHyperparameter,
    ModelKind,
    ModelSpec,
    NonFiniteFeature,
    SingleClassTrainingSet,
    Standardizer,
    TrainedModel,
    UnfittedModel,
    predict_proba,
    split_by_semester,
)
from .serialize import (
    ModelFormatError,
    load_model,
    load_model_file,
    save_model,
    save_model_file,
)
from .train import (
    DEFAULT_GRIDS,
    EmptyGrid,
    GridSearchResult,
    grid_search_cv,
    stratified_folds,
    train_model,
)

__all__ = [
    "DECISION_THRESHOLD",
    "DEFAULT_GRIDS",
    "DatasetSplit",
    "EmptyGrid",
    "GridSearchResult",
    "InvalidHyperparameter",
    "ModelFormatError",
    "ModelKind",
    "ModelSpec",
    "NonFiniteFeature",
    "STANDARDIZED_KINDS",
    "SingleClassTrainingSet",
    "Standardizer",
    "TrainedModel",
    "UnfittedModel",
    "grid_search_cv",
    "load_model",
    "load_model_file",
    "predict_proba",
    "save_model",
    "save_model_file",
    "split_by_semester",
    "stratified_folds",
    "train_model",
]
