"""CART trees: Gini classification trees and second-order gradient trees.

Trees are stored as flat node lists (feature, threshold, left, right, value)
so they serialize to JSON directly.  Split search is vectorized per feature
via sort + prefix sums; thresholds sit at midpoints between distinct values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class Tree:
    # parallel arrays; node 0 is the root
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_node(self) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.float64)
        feature = np.array(self.feature)
        threshold = np.array(self.threshold)
        left = np.array(self.left)
        right = np.array(self.right)
        value = np.array(self.value)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        active = np.arange(X.shape[0])
        while active.size:
            nodes = idx[active]
            is_leaf = feature[nodes] == LEAF
            done = active[is_leaf]
            out[done] = value[nodes[is_leaf]]
            active = active[~is_leaf]
            if not active.size:
                break
            nodes = idx[active]
            go_left = X[active, feature[nodes]] <= threshold[nodes]
            idx[active] = np.where(go_left, left[nodes], right[nodes])
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_state(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right, "value": self.value}

    @classmethod
    def from_state(cls, state: dict) -> "Tree":
        return cls(feature=list(state["feature"]),
                   threshold=[float(t) for t in state["threshold"]],
                   left=list(state["left"]), right=list(state["right"]),
                   value=[float(v) for v in state["value"]])


def _gini_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (weighted child impurity, threshold) for one feature, or None."""
    n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ys = y[order]
    cum_pos = np.cumsum(ys)
    total_pos = cum_pos[-1]
    pos = np.arange(min_leaf - 1, n - min_leaf)
    valid = xs[pos] < xs[pos + 1]
    if not valid.any():
        return None
    pos = pos[valid]
    nl = pos + 1.0
    nr = n - nl
    pl = cum_pos[pos]
    pr = total_pos - pl
    gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
    gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
    weighted = (nl * gini_l + nr * gini_r) / n
    j = int(np.argmin(weighted))
    thr = (xs[pos[j]] + xs[pos[j] + 1]) / 2
    return float(weighted[j]), float(thr)


class ClassificationTree:
    """Gini CART; leaf value = fraction of positive labels."""

    def __init__(self, max_depth: int = 8, min_samples_split: int = 2,
                 min_samples_leaf: int = 1, max_features: int | None = None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.tree: Tree | None = None

    def fit(self, X: np.ndarray, y: np.ndarray,
            rng: np.random.Generator | None = None) -> "ClassificationTree":
        self.tree = Tree()
        self._grow(X, y, depth=0, rng=rng)
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, depth: int,
              rng: np.random.Generator | None) -> int:
        node = self.tree.add_node()
        n = X.shape[0]
        mean = float(y.mean())
        self.tree.value[node] = mean
        parent_gini = 2 * mean * (1 - mean)
        if (depth >= self.max_depth or n < self.min_samples_split
                or parent_gini == 0.0):
            return node

        n_features = X.shape[1]
        if self.max_features is not None and self.max_features < n_features:
            if rng is None:
                raise ValueError("feature subsampling requires an rng")
            candidates = np.sort(rng.choice(n_features, size=self.max_features,
                                            replace=False))
        else:
            candidates = np.arange(n_features)

        best = None
        for f in candidates:
            found = _gini_split(X[:, f], y, self.min_samples_leaf)
            if found is None:
                continue
            impurity, thr = found
            if best is None or impurity < best[0] - 1e-15:
                best = (impurity, int(f), thr)
        if best is None or best[0] >= parent_gini - 1e-12:
            return node

        _, f, thr = best
        mask = X[:, f] <= thr
        self.tree.feature[node] = f
        self.tree.threshold[node] = thr
        self.tree.left[node] = self._grow(X[mask], y[mask], depth + 1, rng)
        self.tree.right[node] = self._grow(X[~mask], y[~mask], depth + 1, rng)
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.tree is None:
            raise RuntimeError("tree not fitted")
        return self.tree.predict(X)


def _grad_split(x: np.ndarray, g: np.ndarray, h: np.ndarray,
                reg_lambda: float, min_leaf: int):
    """Best (gain, threshold) by the second-order split score, or None."""
    n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    cum_g = np.cumsum(g[order])
    cum_h = np.cumsum(h[order])
    G, H = cum_g[-1], cum_h[-1]
    pos = np.arange(min_leaf - 1, n - min_leaf)
    valid = xs[pos] < xs[pos + 1]
    if not valid.any():
        return None
    pos = pos[valid]
    gl, hl = cum_g[pos], cum_h[pos]
    gr, hr = G - gl, H - hl
    gain = 0.5 * (gl ** 2 / (hl + reg_lambda) + gr ** 2 / (hr + reg_lambda)
                  - G ** 2 / (H + reg_lambda))
    j = int(np.argmax(gain))
    thr = (xs[pos[j]] + xs[pos[j] + 1]) / 2
    return float(gain[j]), float(thr)


class GradientTree:
    """Regression tree on (g, h); leaf weight = -G/(H + lambda)."""

    def __init__(self, max_depth: int = 3, min_samples_leaf: int = 1,
                 reg_lambda: float = 0.0, gamma: float = 0.0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.tree: Tree | None = None

    def fit(self, X: np.ndarray, g: np.ndarray, h: np.ndarray) -> "GradientTree":
        self.tree = Tree()
        self._grow(X, g, h, depth=0)
        return self

    def _grow(self, X: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int) -> int:
        node = self.tree.add_node()
        G, H = float(g.sum()), float(h.sum())
        self.tree.value[node] = -G / (H + self.reg_lambda) if (H + self.reg_lambda) > 0 else 0.0
        if depth >= self.max_depth or X.shape[0] < 2 * self.min_samples_leaf:
            return node
        best = None
        for f in range(X.shape[1]):
            found = _grad_split(X[:, f], g, h, self.reg_lambda, self.min_samples_leaf)
            if found is None:
                continue
            gain, thr = found
            if best is None or gain > best[0] + 1e-15:
                best = (gain, f, thr)
        if best is None or best[0] <= self.gamma:
            return node
        _, f, thr = best
        mask = X[:, f] <= thr
        self.tree.feature[node] = f
        self.tree.threshold[node] = thr
        self.tree.left[node] = self._grow(X[mask], g[mask], h[mask], depth + 1)
        self.tree.right[node] = self._grow(X[~mask], g[~mask], h[~mask], depth + 1)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.tree is None:
            raise RuntimeError("tree not fitted")
        return self.tree.predict(X)
