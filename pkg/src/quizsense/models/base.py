"""Model zoo shared types: specs, standardization, the fitted-model wrapper."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ..features import FEATURE_NAMES, FeatureVector, LabeledSample, samples_to_matrix

DECISION_THRESHOLD = 0.5


class ModelKind(str, Enum):
    LR = "LR"
    DT = "DT"
    RF = "RF"
    GBM = "GBM"
    XGBLIKE = "XGBlike"
    NN = "NN"
    KNN = "KNN"
    NB = "NB"
    LINEAR_SVM = "LinearSVM"


# kinds whose inputs are z-scored with train-split statistics
STANDARDIZED_KINDS = {ModelKind.LR, ModelKind.NN, ModelKind.KNN, ModelKind.LINEAR_SVM}

HYPERPARAM_DEFAULTS: dict[ModelKind, dict] = {
    ModelKind.LR: {"lr": 0.1, "epochs": 400, "l2": 1e-4},
    ModelKind.LINEAR_SVM: {"lr": 0.05, "epochs": 400, "l2": 1e-3},
    ModelKind.DT: {"max_depth": 8, "min_samples_split": 2, "min_samples_leaf": 1},
    ModelKind.RF: {"n_trees": 200, "max_depth": 16, "min_samples_leaf": 1,
                   "max_features": "sqrt"},
    ModelKind.GBM: {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3,
                    "min_samples_leaf": 1},
    ModelKind.XGBLIKE: {"n_estimators": 1000, "learning_rate": 0.1, "max_depth": 3,
                        "reg_lambda": 1.0, "gamma": 0.0, "min_samples_leaf": 1},
    ModelKind.NN: {"hidden": [100, 100], "lr": 0.05, "max_epochs": 150,
                   "batch_size": 64, "momentum": 0.9, "patience": 30,
                   "val_fraction": 0.1, "l2": 0.0},
    ModelKind.KNN: {"k": 5},
    ModelKind.NB: {"var_smoothing": 1e-9},
}


class InvalidHyperparameter(ValueError):
    pass


class SingleClassTrainingSet(ValueError):
    pass


class NonFiniteFeature(ValueError):
    pass


class UnfittedModel(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    hyperparams: dict
    seed: int

    def __post_init__(self):
        defaults = HYPERPARAM_DEFAULTS[self.kind]
        unknown = set(self.hyperparams) - set(defaults)
        if unknown:
            raise InvalidHyperparameter(
                f"{self.kind.value}: unknown hyperparams {sorted(unknown)}")
        merged = {**defaults, **self.hyperparams}
        object.__setattr__(self, "hyperparams", merged)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparams": self.hyperparams,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelSpec":
        return cls(kind=ModelKind(obj["kind"]), hyperparams=obj["hyperparams"],
                   seed=obj["seed"])


@dataclass
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        sd = X.std(axis=0)
        return cls(mean=X.mean(axis=0), sd=np.where(sd == 0, 1.0, sd))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.sd

    def to_state(self) -> dict:
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "Standardizer":
        return cls(mean=np.array(state["mean"]), sd=np.array(state["sd"]))


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object  # kind-specific, provides predict_proba(X) and to_state()
    standardizer: Standardizer | None
    metadata: dict = field(default_factory=dict)

    def _prepare(self, X) -> np.ndarray:
        if isinstance(X, FeatureVector):
            X = X.to_array()[None, :]
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {X.shape[1]}")
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return X

    def predict_proba(self, X) -> np.ndarray:
        if self.estimator is None:
            raise UnfittedModel("model has no fitted estimator")
        p = self.estimator.predict_proba(self._prepare(X))
        return np.clip(p, 0.0, 1.0)

    def predict_label(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= DECISION_THRESHOLD).astype(np.int64)


def predict_proba(model: TrainedModel, x: FeatureVector) -> float:
    """Probability of Engaged for a single feature vector."""
    return float(model.predict_proba(x)[0])


def validate_training_matrix(X: np.ndarray, y: np.ndarray) -> None:
    if X.shape[0] == 0:
        raise SingleClassTrainingSet("empty training set")
    if not np.isfinite(X).all():
        raise NonFiniteFeature("training features contain non-finite values")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassTrainingSet(f"training labels contain one class: {classes}")


@dataclass
class DatasetSplit:
    train: list[LabeledSample]
    test: list[LabeledSample]

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        X_tr, y_tr = samples_to_matrix(self.train)
        X_te, y_te = samples_to_matrix(self.test)
        return X_tr, y_tr, X_te, y_te


def split_by_semester(samples: Sequence[LabeledSample],
                      start_time_of: dict[str, int],
                      calendar,
                      train_tags: Sequence[str],
                      test_tag: str) -> DatasetSplit:
    """Assign samples to train/test by their attempt's semester tag."""
    train, test = [], []
    train_set = set(train_tags)
    for s in samples:
        ts = start_time_of.get(s.attempt_id)
        if ts is None:
            continue
        tag = calendar.tag_for(ts)
        if tag in train_set:
            train.append(s)
        elif tag == test_tag:
            test.append(s)
    return DatasetSplit(train=train, test=test)
