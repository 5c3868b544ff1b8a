"""The nine classifier implementations behind the model zoo.

All estimators consume a numeric matrix (standardization, when a kind needs
it, happens in the TrainedModel wrapper) and emit P(Engaged).  Each carries
to_state/from_state for the on-disk model format.
"""

from __future__ import annotations

import numpy as np

from ..eval import SingleClassInput, roc_auc
from .base import ModelKind
from .trees import ClassificationTree, GradientTree, Tree


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticRegressionGD:
    """Full-batch gradient descent on L2-regularized logistic loss."""

    def __init__(self, lr: float = 0.1, epochs: int = 400, l2: float = 1e-4):
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "LogisticRegressionGD":
        n, d = X.shape
        self.w = np.zeros(d)
        self.b = 0.0
        for _ in range(self.epochs):
            err = sigmoid(X @ self.w + self.b) - y
            self.w -= self.lr * (X.T @ err / n + self.l2 * self.w)
            self.b -= self.lr * float(err.mean())
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.w + self.b)

    def size(self) -> float:
        return float(len(self.w)) if self.w is not None else 0.0

    def to_state(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "LogisticRegressionGD":
        est = cls(**hp)
        est.w = np.array(state["w"], dtype=np.float64)
        est.b = float(state["b"])
        return est


class LinearSVMGD:
    """Subgradient descent on L2-regularized hinge loss; sigmoid(margin) proba."""

    def __init__(self, lr: float = 0.05, epochs: int = 400, l2: float = 1e-3):
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "LinearSVMGD":
        n, d = X.shape
        ysign = np.where(y > 0, 1.0, -1.0)
        self.w = np.zeros(d)
        self.b = 0.0
        for _ in range(self.epochs):
            margin = ysign * (X @ self.w + self.b)
            viol = margin < 1.0
            grad_w = self.l2 * self.w - (ysign[viol, None] * X[viol]).sum(axis=0) / n
            grad_b = -float(ysign[viol].sum()) / n
            self.w -= self.lr * grad_w
            self.b -= self.lr * grad_b
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.w + self.b)

    def size(self) -> float:
        return float(len(self.w)) if self.w is not None else 0.0

    def to_state(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "LinearSVMGD":
        est = cls(**hp)
        est.w = np.array(state["w"], dtype=np.float64)
        est.b = float(state["b"])
        return est


class DecisionTreeClassifier:
    def __init__(self, max_depth: int = 8, min_samples_split: int = 2,
                 min_samples_leaf: int = 1):
        self.params = dict(max_depth=max_depth, min_samples_split=min_samples_split,
                           min_samples_leaf=min_samples_leaf)
        self.cart: ClassificationTree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "DecisionTreeClassifier":
        self.cart = ClassificationTree(**self.params).fit(X, y)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.cart.predict_proba(X)

    def size(self) -> float:
        return float(self.cart.tree.n_nodes) if self.cart else 0.0

    def to_state(self) -> dict:
        return {"tree": self.cart.tree.to_state()}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "DecisionTreeClassifier":
        est = cls(**hp)
        est.cart = ClassificationTree(**est.params)
        est.cart.tree = Tree.from_state(state["tree"])
        return est


class RandomForestClassifier:
    """Bagged Gini trees with per-node feature subsampling."""

    def __init__(self, n_trees: int = 200, max_depth: int = 16,
                 min_samples_leaf: int = 1, max_features: str | int = "sqrt"):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.trees: list[ClassificationTree] = []

    def _n_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(d)))
        return min(int(self.max_features), d)

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator) -> "RandomForestClassifier":
        n, d = X.shape
        m = self._n_features(d)
        self.trees = []
        for _ in range(self.n_trees):
            idx = rng.integers(0, n, size=n)
            tree = ClassificationTree(max_depth=self.max_depth,
                                      min_samples_leaf=self.min_samples_leaf,
                                      max_features=m)
            tree.fit(X[idx], y[idx], rng=rng)
            self.trees.append(tree)
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict_proba(X)
        return acc / max(len(self.trees), 1)

    def size(self) -> float:
        return float(sum(t.tree.n_nodes for t in self.trees))

    def to_state(self) -> dict:
        return {"trees": [t.tree.to_state() for t in self.trees]}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "RandomForestClassifier":
        est = cls(**hp)
        est.trees = []
        for tstate in state["trees"]:
            tree = ClassificationTree(max_depth=est.max_depth,
                                      min_samples_leaf=est.min_samples_leaf)
            tree.tree = Tree.from_state(tstate)
            est.trees.append(tree)
        return est


class _BoostedTrees:
    """Additive trees on logistic loss via gradient/hessian statistics."""

    reg_lambda = 0.0
    gamma = 0.0

    def __init__(self, n_estimators: int, learning_rate: float, max_depth: int,
                 min_samples_leaf: int):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.f0 = 0.0
        self.trees: list[GradientTree] = []

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "_BoostedTrees":
        p0 = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        self.f0 = float(np.log(p0 / (1 - p0)))
        F = np.full(X.shape[0], self.f0)
        self.trees = []
        for _ in range(self.n_estimators):
            p = sigmoid(F)
            g = p - y
            h = np.maximum(p * (1 - p), 1e-12)
            tree = GradientTree(max_depth=self.max_depth,
                                min_samples_leaf=self.min_samples_leaf,
                                reg_lambda=self.reg_lambda, gamma=self.gamma)
            tree.fit(X, g, h)
            F = F + self.learning_rate * tree.predict(X)
            self.trees.append(tree)
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        F = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            F = F + self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def size(self) -> float:
        return float(sum(t.tree.n_nodes for t in self.trees))

    def to_state(self) -> dict:
        return {"f0": self.f0, "trees": [t.tree.to_state() for t in self.trees]}

    def _restore(self, state: dict) -> None:
        self.f0 = float(state["f0"])
        self.trees = []
        for tstate in state["trees"]:
            tree = GradientTree(max_depth=self.max_depth,
                                min_samples_leaf=self.min_samples_leaf,
                                reg_lambda=self.reg_lambda, gamma=self.gamma)
            tree.tree = Tree.from_state(tstate)
            self.trees.append(tree)


class GBMClassifier(_BoostedTrees):
    reg_lambda = 0.0
    gamma = 0.0

    def __init__(self, n_estimators: int = 100, learning_rate: float = 0.1,
                 max_depth: int = 3, min_samples_leaf: int = 1):
        super().__init__(n_estimators, learning_rate, max_depth, min_samples_leaf)

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "GBMClassifier":
        est = cls(**hp)
        est._restore(state)
        return est


class XGBlikeClassifier(_BoostedTrees):
    """Boosted trees with L2-regularized leaf weights and split gain."""

    def __init__(self, n_estimators: int = 1000, learning_rate: float = 0.1,
                 max_depth: int = 3, reg_lambda: float = 1.0, gamma: float = 0.0,
                 min_samples_leaf: int = 1):
        super().__init__(n_estimators, learning_rate, max_depth, min_samples_leaf)
        self.reg_lambda = reg_lambda
        self.gamma = gamma

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "XGBlikeClassifier":
        est = cls(**hp)
        est._restore(state)
        return est


class MLPClassifier:
    """ReLU MLP with a single sigmoid output.

    Mini-batch momentum SGD on cross-entropy; early stopping restores the
    weights with the best validation balanced accuracy (AUC as tiebreak,
    so threshold-0.5 behaviour drives selection even under class imbalance).
    """

    def __init__(self, hidden=(100, 100), lr: float = 0.05, max_epochs: int = 150,
                 batch_size: int = 64, momentum: float = 0.9, patience: int = 30,
                 val_fraction: float = 0.1, l2: float = 0.0):
        self.hidden = tuple(int(h) for h in hidden)
        self.lr = lr
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.momentum = momentum
        self.patience = patience
        self.val_fraction = val_fraction
        self.l2 = l2
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        self.history: dict = {}

    def _init_params(self, d: int, rng: np.random.Generator) -> None:
        sizes = [d, *self.hidden, 1]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        acts = [X]
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
            acts.append(a)
        z = a @ self.weights[-1] + self.biases[-1]
        return acts, sigmoid(z[:, 0])

    def _stratified_val_split(self, y: np.ndarray, rng: np.random.Generator):
        val_idx = []
        for cls in (0, 1):
            members = np.flatnonzero(y == cls)
            rng.shuffle(members)
            n_val = int(round(len(members) * self.val_fraction))
            val_idx.extend(members[:n_val])
        val_mask = np.zeros(len(y), dtype=bool)
        val_mask[val_idx] = True
        return ~val_mask, val_mask

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator) -> "MLPClassifier":
        self._init_params(X.shape[1], rng)
        train_mask, val_mask = self._stratified_val_split(y, rng)
        if val_mask.sum() < 2 or len(np.unique(y[val_mask])) < 2:
            train_mask = np.ones(len(y), dtype=bool)
            val_mask = train_mask
        X_tr, y_tr = X[train_mask], y[train_mask]
        X_val, y_val = X[val_mask], y[val_mask]

        vel_w = [np.zeros_like(W) for W in self.weights]
        vel_b = [np.zeros_like(b) for b in self.biases]
        best_score = (-np.inf, -np.inf)
        best_params = None
        stale = 0
        epochs_run = 0
        for epoch in range(self.max_epochs):
            order = rng.permutation(len(y_tr))
            for start in range(0, len(order), self.batch_size):
                batch = order[start:start + self.batch_size]
                self._step(X_tr[batch], y_tr[batch], vel_w, vel_b)
            epochs_run = epoch + 1
            p_val = self._forward(X_val)[1]
            try:
                auc = roc_auc(y_val.astype(int), p_val)
            except SingleClassInput:
                auc = 0.5
            score = (self._balanced_accuracy(y_val, p_val), auc)
            improved = (score[0] > best_score[0] + 1e-12
                        or (abs(score[0] - best_score[0]) <= 1e-12
                            and score[1] > best_score[1] + 1e-12))
            if improved:
                best_score = score
                best_params = ([W.copy() for W in self.weights],
                               [b.copy() for b in self.biases])
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break
        if best_params is not None:
            self.weights, self.biases = best_params
        self.history = {"epochs": epochs_run, "best_val_ba": float(best_score[0]),
                        "best_val_auc": float(best_score[1])}
        return self

    @staticmethod
    def _balanced_accuracy(y: np.ndarray, p: np.ndarray) -> float:
        pred = p >= 0.5
        pos = y == 1
        if not pos.any() or pos.all():
            return 0.5
        tpr = float(pred[pos].mean())
        tnr = float((~pred[~pos]).mean())
        return (tpr + tnr) / 2.0

    def _step(self, Xb: np.ndarray, yb: np.ndarray,
              vel_w: list[np.ndarray], vel_b: list[np.ndarray]) -> None:
        acts, p = self._forward(Xb)
        n = len(yb)
        delta = (p - yb)[:, None] / n  # d(loss)/dz for sigmoid + cross-entropy
        grads_w = []
        grads_b = []
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w.append(acts[layer].T @ delta + self.l2 * self.weights[layer])
            grads_b.append(delta.sum(axis=0))
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * (acts[layer] > 0)
        grads_w.reverse()
        grads_b.reverse()
        for i in range(len(self.weights)):
            vel_w[i] = self.momentum * vel_w[i] - self.lr * grads_w[i]
            vel_b[i] = self.momentum * vel_b[i] - self.lr * grads_b[i]
            self.weights[i] += vel_w[i]
            self.biases[i] += vel_b[i]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._forward(X)[1]

    def size(self) -> float:
        return float(sum(self.hidden))

    def to_state(self) -> dict:
        return {"weights": [W.tolist() for W in self.weights],
                "biases": [b.tolist() for b in self.biases],
                "history": self.history}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "MLPClassifier":
        est = cls(**hp)
        est.weights = [np.array(W, dtype=np.float64) for W in state["weights"]]
        est.biases = [np.array(b, dtype=np.float64) for b in state["biases"]]
        est.history = state.get("history", {})
        return est


class KNNClassifier:
    """Stores the (standardized) training set; proba = engaged share of k nearest."""

    def __init__(self, k: int = 5):
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "KNNClassifier":
        self.X = X.copy()
        self.y = y.copy()
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, len(self.y))
        out = np.empty(X.shape[0])
        train_sq = (self.X ** 2).sum(axis=1)
        for start in range(0, X.shape[0], 256):
            chunk = X[start:start + 256]
            d2 = train_sq[None, :] - 2 * chunk @ self.X.T + (chunk ** 2).sum(axis=1)[:, None]
            # stable sort keeps equal-distance ties in training order
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            out[start:start + 256] = self.y[nearest].mean(axis=1)
        return out

    def size(self) -> float:
        return float(self.k)

    def to_state(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "KNNClassifier":
        est = cls(**hp)
        est.X = np.array(state["X"], dtype=np.float64)
        est.y = np.array(state["y"], dtype=np.float64)
        return est


class GaussianNBClassifier:
    """Per-class independent Gaussians with variance smoothing."""

    def __init__(self, var_smoothing: float = 1e-9):
        self.var_smoothing = var_smoothing
        self.log_prior: np.ndarray | None = None
        self.mean: np.ndarray | None = None
        self.var: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray, rng=None) -> "GaussianNBClassifier":
        classes = [0.0, 1.0]
        self.log_prior = np.array([np.log((y == c).mean()) for c in classes])
        self.mean = np.stack([X[y == c].mean(axis=0) for c in classes])
        self.var = np.stack([X[y == c].var(axis=0) for c in classes])
        self.var += self.var_smoothing * float(X.var(axis=0).max())
        self.var = np.maximum(self.var, 1e-300)
        return self

    def _joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        jll = np.empty((X.shape[0], 2))
        for c in (0, 1):
            diff = X - self.mean[c]
            jll[:, c] = self.log_prior[c] - 0.5 * np.sum(
                np.log(2 * np.pi * self.var[c]) + diff ** 2 / self.var[c], axis=1)
        return jll

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        jll = self._joint_log_likelihood(X)
        m = jll.max(axis=1, keepdims=True)
        ex = np.exp(jll - m)
        return ex[:, 1] / ex.sum(axis=1)

    def size(self) -> float:
        return 0.0

    def to_state(self) -> dict:
        return {"log_prior": self.log_prior.tolist(), "mean": self.mean.tolist(),
                "var": self.var.tolist()}

    @classmethod
    def from_state(cls, state: dict, hp: dict) -> "GaussianNBClassifier":
        est = cls(**hp)
        est.log_prior = np.array(state["log_prior"], dtype=np.float64)
        est.mean = np.array(state["mean"], dtype=np.float64)
        est.var = np.array(state["var"], dtype=np.float64)
        return est


ESTIMATOR_CLASSES = {
    ModelKind.LR: LogisticRegressionGD,
    ModelKind.LINEAR_SVM: LinearSVMGD,
    ModelKind.DT: DecisionTreeClassifier,
    ModelKind.RF: RandomForestClassifier,
    ModelKind.GBM: GBMClassifier,
    ModelKind.XGBLIKE: XGBlikeClassifier,
    ModelKind.NN: MLPClassifier,
    ModelKind.KNN: KNNClassifier,
    ModelKind.NB: GaussianNBClassifier,
}


def make_estimator(kind: ModelKind, hyperparams: dict):
    return ESTIMATOR_CLASSES[kind](**hyperparams)
