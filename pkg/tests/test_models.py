import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quizsense.eval import roc_auc
from quizsense.features import FEATURE_NAMES, FeatureVector, Label, LabeledSample
from quizsense.models import (
    DEFAULT_GRIDS,
    EmptyGrid,
    InvalidHyperparameter,
    ModelKind,
    ModelSpec,
    NonFiniteFeature,
    SingleClassTrainingSet,
    TrainedModel,
    UnfittedModel,
    grid_search_cv,
    load_model,
    predict_proba,
    save_model,
    stratified_folds,
    train_model,
)
from quizsense.models.zoo import GBMClassifier, KNNClassifier, LogisticRegressionGD

SKEW = FEATURE_NAMES.index("stat_skew")
KURT = FEATURE_NAMES.index("stat_kurtosis")


def vec(a=0.0, b=0.0) -> FeatureVector:
    """16-dim vector with two free signed slots (stat_skew, stat_kurtosis)."""
    values = dict.fromkeys(FEATURE_NAMES, 0)
    values.update(dict(attemptnr=1, previous_perf=0.5, stat_skew=float(a),
                       stat_kurtosis=float(b)))
    return FeatureVector(**values)


def sample(a, b, engaged) -> LabeledSample:
    return LabeledSample("a", 0, vec(a, b),
                         Label.ENGAGED if engaged else Label.DISENGAGED)


def separable_set(n=40, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        if rng.random() < 0.5:
            out.append(sample(rng.normal(2.0, 0.3), rng.normal(2.0, 0.3), True))
        else:
            out.append(sample(rng.normal(-2.0, 0.3), rng.normal(-2.0, 0.3), False))
    return out


def xor_set(n_per_corner=60, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for sa in (-1.0, 1.0):
        for sb in (-1.0, 1.0):
            for _ in range(n_per_corner):
                out.append(sample(sa + rng.normal(0, 0.05),
                                  sb + rng.normal(0, 0.05),
                                  engaged=(sa * sb > 0)))
    return out


def training_accuracy(model: TrainedModel, samples) -> float:
    X = np.stack([s.features.to_array() for s in samples])
    y = np.array([s.engaged for s in samples])
    return float((model.predict_label(X) == y).mean())


def test_lr_separable_perfect():
    data = separable_set()
    model = train_model(ModelSpec(ModelKind.LR, {}, seed=0), data)
    assert training_accuracy(model, data) == 1.0


def test_nn_xor_perfect():
    data = xor_set()
    spec = ModelSpec(ModelKind.NN, {"hidden": [100, 100], "max_epochs": 2000,
                                    "lr": 0.05, "patience": 2000}, seed=0)
    model = train_model(spec, data)
    assert training_accuracy(model, data) == 1.0


def test_nb_blob_boundary():
    rng = np.random.default_rng(3)
    data = [sample(rng.normal(-2, 1), 0, False) for _ in range(300)]
    data += [sample(rng.normal(2, 1), 0, True) for _ in range(300)]
    model = train_model(ModelSpec(ModelKind.NB, {}, seed=0), data)
    # boundary sits near the midpoint of the two blob means
    lo = predict_proba(model, vec(-0.5, 0))
    hi = predict_proba(model, vec(0.5, 0))
    assert lo < 0.5 < hi
    xs = np.linspace(-4, 4, 33)
    probs = [predict_proba(model, vec(x, 0)) for x in xs]
    assert probs == sorted(probs)


def test_knn_self_point():
    data = separable_set(n=20)
    model = train_model(ModelSpec(ModelKind.KNN, {"k": 1}, seed=0), data)
    for s in data[:5]:
        assert predict_proba(model, s.features) == (1.0 if s.engaged else 0.0)


def test_lr_zero_weights_is_half():
    est = LogisticRegressionGD()
    est.w = np.zeros(len(FEATURE_NAMES))
    est.b = 0.0
    model = TrainedModel(spec=ModelSpec(ModelKind.LR, {}, seed=0),
                         estimator=est, standardizer=None)
    assert predict_proba(model, vec(3.7, -1.2)) == 0.5


def test_gbm_zero_trees_base_rate():
    data = separable_set(n=40)
    y_mean = np.mean([s.engaged for s in data])
    spec = ModelSpec(ModelKind.GBM, {"n_estimators": 0}, seed=0)
    model = train_model(spec, data)
    assert predict_proba(model, vec(0, 0)) == pytest.approx(y_mean, abs=1e-9)


@pytest.mark.parametrize("kind", list(ModelKind))
def test_every_kind_learns_separable(kind):
    data = separable_set(n=120)
    hp = {}
    if kind is ModelKind.RF:
        hp = {"n_trees": 20}
    elif kind is ModelKind.XGBLIKE:
        hp = {"n_estimators": 30}
    elif kind is ModelKind.GBM:
        hp = {"n_estimators": 30}
    elif kind is ModelKind.NN:
        hp = {"max_epochs": 200}
    model = train_model(ModelSpec(kind, hp, seed=0), data)
    assert training_accuracy(model, data) >= 0.95
    X = np.stack([s.features.to_array() for s in data])
    p = model.predict_proba(X)
    assert np.all((p >= 0) & (p <= 1))


@pytest.mark.parametrize("kind", list(ModelKind))
def test_determinism_bitwise(kind):
    data = separable_set(n=30, seed=7)
    hp = {"n_trees": 5} if kind is ModelKind.RF else \
        {"n_estimators": 5} if kind in (ModelKind.GBM, ModelKind.XGBLIKE) else \
        {"max_epochs": 5} if kind is ModelKind.NN else {}
    spec = ModelSpec(kind, hp, seed=42)
    blob1 = save_model(train_model(spec, data))
    blob2 = save_model(train_model(spec, data))
    assert blob1 == blob2


@pytest.mark.parametrize("kind", list(ModelKind))
def test_qsm_roundtrip(kind):
    data = separable_set(n=30, seed=7)
    hp = {"n_trees": 5} if kind is ModelKind.RF else \
        {"n_estimators": 5} if kind in (ModelKind.GBM, ModelKind.XGBLIKE) else \
        {"max_epochs": 5} if kind is ModelKind.NN else {}
    model = train_model(ModelSpec(kind, hp, seed=42), data)
    restored = load_model(save_model(model))
    X = np.stack([s.features.to_array() for s in data])
    np.testing.assert_array_equal(model.predict_proba(X),
                                  restored.predict_proba(X))
    assert save_model(restored) == save_model(model)


@pytest.mark.parametrize("kind", [ModelKind.DT, ModelKind.RF, ModelKind.GBM,
                                  ModelKind.XGBLIKE])
def test_tree_scale_invariance(kind):
    data = separable_set(n=50, seed=5)
    hp = {"n_trees": 10} if kind is ModelKind.RF else \
        {"n_estimators": 10} if kind is not ModelKind.DT else {}
    model_a = train_model(ModelSpec(kind, hp, seed=9), data)

    scaled = [LabeledSample(s.attempt_id, s.date_rel,
                            vec(s.features.stat_skew * 1000.0,
                                s.features.stat_kurtosis),
                            s.label) for s in data]
    model_b = train_model(ModelSpec(kind, hp, seed=9), scaled)

    X_a = np.stack([s.features.to_array() for s in data])
    X_b = np.stack([s.features.to_array() for s in scaled])
    np.testing.assert_array_equal(model_a.predict_label(X_a),
                                  model_b.predict_label(X_b))


def test_training_errors():
    one_class = [sample(1, 1, True), sample(2, 2, True)]
    with pytest.raises(SingleClassTrainingSet):
        train_model(ModelSpec(ModelKind.LR, {}, seed=0), one_class)

    bad = [sample(float("nan"), 0, True), sample(0, 0, False)]
    with pytest.raises(NonFiniteFeature):
        train_model(ModelSpec(ModelKind.LR, {}, seed=0), bad)

    with pytest.raises(InvalidHyperparameter):
        ModelSpec(ModelKind.DT, {"depth": 3}, seed=0)

    model = TrainedModel(spec=ModelSpec(ModelKind.LR, {}, seed=0),
                         estimator=None, standardizer=None)
    with pytest.raises(UnfittedModel):
        model.predict_proba(vec())


def test_grid_search_singleton():
    data = separable_set(n=40)
    result = grid_search_cv(ModelKind.DT, [{"max_depth": 4}], data, seed=0)
    assert result.best_spec.hyperparams["max_depth"] == 4
    assert len(result.table) == 1
    assert len(result.table[0]["fold_aucs"]) == 4


def test_grid_search_prefers_capable_depth():
    data = xor_set(n_per_corner=40)
    result = grid_search_cv(ModelKind.DT, [{"max_depth": 1}, {"max_depth": 3}],
                            data, seed=0)
    assert result.best_spec.hyperparams["max_depth"] == 3
    aucs = {row["params"]["max_depth"]: row["mean_auc"] for row in result.table}
    assert aucs[3] > aucs[1]


def test_grid_search_tie_breaks_to_smaller():
    # blobs so far apart every k is perfect: AUC ties, smaller k must win
    data = separable_set(n=80)
    result = grid_search_cv(ModelKind.KNN, [{"k": 9}, {"k": 3}], data, seed=0)
    aucs = {row["params"]["k"]: row["mean_auc"] for row in result.table}
    assert aucs[9] == aucs[3] == 1.0
    assert result.best_spec.hyperparams["k"] == 3


def test_grid_search_empty_grid():
    with pytest.raises(EmptyGrid):
        grid_search_cv(ModelKind.DT, [], separable_set(), seed=0)


def test_default_grids_include_reference_configs():
    assert {"n_trees": 200} in DEFAULT_GRIDS[ModelKind.RF]
    assert {"max_depth": 8} in DEFAULT_GRIDS[ModelKind.DT]
    assert {"n_estimators": 1000} in DEFAULT_GRIDS[ModelKind.XGBLIKE]
    assert {"n_estimators": 100} in DEFAULT_GRIDS[ModelKind.GBM]
    assert {"hidden": [100, 100]} in DEFAULT_GRIDS[ModelKind.NN]


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=8, max_value=200), st.integers(min_value=2, max_value=6),
       st.integers(min_value=0, max_value=99))
def test_stratified_folds_partition(n, folds, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n).astype(np.float64)
    assignment = stratified_folds(y, folds, seed)
    assert assignment.shape == (n,)
    assert set(np.unique(assignment)) <= set(range(folds))
    # each class spreads as evenly as possible across folds
    for cls in (0, 1):
        counts = np.bincount(assignment[y == cls], minlength=folds)
        if (y == cls).sum():
            assert counts.max() - counts.min() <= 1


def test_knn_probability_is_neighbor_share():
    data = [sample(0.0, 0.0, True), sample(0.1, 0.0, False),
            sample(0.2, 0.0, True), sample(5.0, 5.0, False)]
    model = train_model(ModelSpec(ModelKind.KNN, {"k": 3}, seed=0), data)
    p = predict_proba(model, vec(0.05, 0.0))
    assert p == pytest.approx(2 / 3)


def test_gbm_improves_with_rounds():
    data = xor_set(n_per_corner=30)
    X = np.stack([s.features.to_array() for s in data])
    y = np.array([float(s.engaged) for s in data])
    weak = train_model(ModelSpec(ModelKind.GBM, {"n_estimators": 2}, seed=0), data)
    strong = train_model(ModelSpec(ModelKind.GBM, {"n_estimators": 60}, seed=0), data)
    auc_weak = roc_auc(y.astype(int), weak.predict_proba(X))
    auc_strong = roc_auc(y.astype(int), strong.predict_proba(X))
    assert auc_strong > auc_weak
    assert auc_strong > 0.99
