"""Model fitting and seeded 4-fold grid search maximizing validation AUC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..eval import SingleClassInput, roc_auc
from ..features import LabeledSample, samples_to_matrix
from .base import (
    STANDARDIZED_KINDS,
    ModelKind,
    ModelSpec,
    Standardizer,
    TrainedModel,
    validate_training_matrix,
)
from .zoo import make_estimator


class EmptyGrid(ValueError):
    pass


DEFAULT_GRIDS: dict[ModelKind, list[dict]] = {
    ModelKind.LR: [{"l2": 1e-4}, {"l2": 1e-2}],
    ModelKind.LINEAR_SVM: [{"l2": 1e-3}, {"l2": 1e-1}],
    ModelKind.DT: [{"max_depth": 4}, {"max_depth": 8}, {"max_depth": 12}],
    ModelKind.RF: [{"n_trees": 100}, {"n_trees": 200}],
    ModelKind.GBM: [{"n_estimators": 50}, {"n_estimators": 100}],
    ModelKind.XGBLIKE: [{"n_estimators": 300}, {"n_estimators": 1000}],
    ModelKind.NN: [{"hidden": [100]}, {"hidden": [100, 100]}],
    ModelKind.KNN: [{"k": 3}, {"k": 5}, {"k": 9}],
    ModelKind.NB: [{"var_smoothing": 1e-9}],
}


def _fit_matrix(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> TrainedModel:
    validate_training_matrix(X, y)
    standardizer = None
    if spec.kind in STANDARDIZED_KINDS:
        standardizer = Standardizer.fit(X)
        X = standardizer.transform(X)
    rng = np.random.default_rng(spec.seed)
    estimator = make_estimator(spec.kind, spec.hyperparams)
    estimator.fit(X, y, rng)
    metadata = {"n_train": int(len(y)), "engaged_share": float(y.mean())}
    if hasattr(estimator, "history") and estimator.history:
        metadata["training"] = estimator.history
    return TrainedModel(spec=spec, estimator=estimator,
                        standardizer=standardizer, metadata=metadata)


def train_model(spec: ModelSpec, train: Sequence[LabeledSample]) -> TrainedModel:
    X, y = samples_to_matrix(train)
    return _fit_matrix(spec, X, y)


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold index per sample; each class dealt round-robin after a shuffle."""
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(y), dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        rng.shuffle(members)
        assignment[members] = np.arange(len(members)) % folds
    return assignment


@dataclass
class GridSearchResult:
    best_spec: ModelSpec
    table: list[dict]  # one row per config: params, fold_aucs, mean_auc, size


def grid_search_cv(kind: ModelKind, grid: Sequence[dict] | None,
                   train: Sequence[LabeledSample], folds: int = 4,
                   seed: int = 0) -> GridSearchResult:
    """Pick the config with the best mean validation AUC.

    Ties go to the smaller fitted model (fewer nodes/units), then to grid
    order.  Fold assignment is stratified and seeded.
    """
    if grid is None:
        grid = DEFAULT_GRIDS[kind]
    if not grid:
        raise EmptyGrid(f"no configs for {kind.value}")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    X, y = samples_to_matrix(train)
    validate_training_matrix(X, y)
    assignment = stratified_folds(y, folds, seed)

    table: list[dict] = []
    for gi, params in enumerate(grid):
        spec = ModelSpec(kind=kind, hyperparams=dict(params), seed=seed)
        fold_aucs: list[float] = []
        sizes: list[float] = []
        for f in range(folds):
            val = assignment == f
            model = _fit_matrix(spec, X[~val], y[~val])
            scores = model.predict_proba(X[val])
            try:
                fold_aucs.append(roc_auc(y[val].astype(int), scores))
            except SingleClassInput:
                fold_aucs.append(0.5)
            sizes.append(float(model.estimator.size()))
        table.append({
            "params": dict(params),
            "grid_index": gi,
            "fold_aucs": fold_aucs,
            "mean_auc": float(np.mean(fold_aucs)),
            "size": float(np.mean(sizes)),
        })

    best = min(table, key=lambda row: (-row["mean_auc"], row["size"], row["grid_index"]))
    best_spec = ModelSpec(kind=kind, hyperparams=dict(best["params"]), seed=seed)
    return GridSearchResult(best_spec=best_spec, table=table)
