"""Shapley attributions, SHAP summaries, and partial-dependence thresholds.

Attributions target the probability of Engaged.  Absent features are
marginalized over a background sample; exact_shapley enumerates all 2^M
coalitions (M <= 12), kernel_shap fits the Shapley-kernel weighted least
squares with the efficiency identity enforced by constraint elimination.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .features import FEATURE_NAMES, LabeledSample, samples_to_matrix

MAX_EXACT_FEATURES = 12
DEFAULT_BACKGROUND_SIZE = 100
DEFAULT_COALITION_BUDGET = 64


class TooManyFeatures(ValueError):
    pass


class EmptyBackground(ValueError):
    pass


class BudgetTooSmall(ValueError):
    pass


@dataclass
class ShapExplanation:
    base_value: float
    attributions: np.ndarray
    model_output: float
    attempt_id: str | None = None
    date_rel: int | None = None

    @property
    def efficiency_residual(self) -> float:
        return float(self.model_output - self.base_value - self.attributions.sum())


@dataclass
class DependenceCurve:
    feature: str
    grid: list[float]
    values: list[float]
    baseline: float
    thresholds: list[float] = field(default_factory=list)


def _as_predict_fn(model) -> Callable[[np.ndarray], np.ndarray]:
    if hasattr(model, "predict_proba"):
        return lambda X: np.asarray(model.predict_proba(X), dtype=np.float64)
    return lambda X: np.asarray(model(X), dtype=np.float64)


def stratified_background(samples: Sequence[LabeledSample],
                          size: int = DEFAULT_BACKGROUND_SIZE,
                          seed: int = 0) -> np.ndarray:
    """Label-proportional seeded subsample of training rows."""
    if not samples:
        raise EmptyBackground("no samples to draw a background from")
    X, y = samples_to_matrix(samples)
    if len(samples) <= size:
        return X
    rng = np.random.default_rng(seed)
    picked: list[int] = []
    for cls in (0.0, 1.0):
        members = np.flatnonzero(y == cls)
        if not len(members):
            continue
        share = max(1, int(round(size * len(members) / len(y))))
        take = min(share, len(members))
        picked.extend(rng.choice(members, size=take, replace=False))
    picked = sorted(picked)[:size]
    return X[picked]


def _coalition_values(fn, x: np.ndarray, background: np.ndarray,
                      subset: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """v(S) for each mask row: mean_b f(x on S, b elsewhere-in-subset, x outside)."""
    n_b = background.shape[0]
    n_m = masks.shape[0]
    base = np.tile(background, (n_m, 1))
    # features outside the attributed subset stay pinned at x
    outside = np.ones(x.shape[0], dtype=bool)
    outside[subset] = False
    base[:, outside] = x[outside]
    for i, mask in enumerate(masks):
        rows = slice(i * n_b, (i + 1) * n_b)
        on = subset[mask]
        if on.size:
            base[rows, on] = x[on]
    preds = fn(base)
    return preds.reshape(n_m, n_b).mean(axis=1)


def exact_shapley(model, x: np.ndarray, background: np.ndarray,
                  feature_subset: Sequence[int] | None = None) -> ShapExplanation:
    """Full-enumeration Shapley values; efficiency holds to 1e-9."""
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[0] == 0:
        raise EmptyBackground("background set is empty")
    subset = (np.arange(x.shape[0]) if feature_subset is None
              else np.asarray(sorted(feature_subset), dtype=np.int64))
    M = subset.shape[0]
    if M > MAX_EXACT_FEATURES:
        raise TooManyFeatures(f"{M} features exceeds the 2^{MAX_EXACT_FEATURES} budget")
    fn = _as_predict_fn(model)

    # all 2^M coalitions as boolean masks, index = bit pattern
    codes = np.arange(2 ** M, dtype=np.uint32)
    masks = (codes[:, None] >> np.arange(M)) & 1
    masks = masks.astype(bool)
    v = _coalition_values(fn, x, background, subset, masks)

    fact = [math.factorial(k) for k in range(M + 1)]
    weight_by_size = [fact[s] * fact[M - s - 1] / fact[M] for s in range(M)]
    sizes = masks.sum(axis=1)

    phi = np.zeros(x.shape[0])
    for j, fidx in enumerate(subset):
        without = ~masks[:, j]
        codes_without = codes[without]
        v_with = v[codes_without | (1 << j)]
        v_without = v[codes_without]
        w = np.array([weight_by_size[s] for s in sizes[without]])
        phi[fidx] = float(np.sum(w * (v_with - v_without)))

    return ShapExplanation(base_value=float(v[0]), attributions=phi,
                           model_output=float(v[-1]))


def _kernel_weight(M: int, s: int) -> float:
    return (M - 1) / (math.comb(M, s) * s * (M - s))


def _pick_coalitions(M: int, budget: int, seed: int) -> np.ndarray:
    """Deterministic coalition masks: whole size-classes by descending kernel
    weight, then a seeded sample from the first class that does not fit."""
    order = sorted(range(1, M), key=lambda s: (-_kernel_weight(M, s), s))
    rng = np.random.default_rng(seed)
    masks: list[np.ndarray] = []
    remaining = budget
    for s in order:
        class_size = math.comb(M, s)
        if class_size <= remaining:
            for comb in combinations(range(M), s):
                mask = np.zeros(M, dtype=bool)
                mask[list(comb)] = True
                masks.append(mask)
            remaining -= class_size
        elif remaining > 0:
            seen = set()
            while len(seen) < remaining:
                comb = tuple(sorted(rng.choice(M, size=s, replace=False)))
                seen.add(comb)
            for comb in sorted(seen):
                mask = np.zeros(M, dtype=bool)
                mask[list(comb)] = True
                masks.append(mask)
            remaining = 0
        if remaining == 0:
            break
    return np.array(masks, dtype=bool)


def kernel_shap(model, x: np.ndarray, background: np.ndarray,
                coalition_budget: int = DEFAULT_COALITION_BUDGET,
                seed: int = 0,
                feature_subset: Sequence[int] | None = None) -> ShapExplanation:
    """Shapley-kernel weighted least squares with exact efficiency.

    A budget covering all 2^M - 2 proper coalitions reproduces
    exact_shapley to numerical precision.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    background = np.atleast_2d(np.asarray(background, dtype=np.float64))
    if background.shape[0] == 0:
        raise EmptyBackground("background set is empty")
    subset = (np.arange(x.shape[0]) if feature_subset is None
              else np.asarray(sorted(feature_subset), dtype=np.int64))
    M = subset.shape[0]
    if M == 0:
        raise TooManyFeatures("empty feature subset")
    if coalition_budget < M + 2:
        raise BudgetTooSmall(f"budget {coalition_budget} < M+2 = {M + 2}")
    fn = _as_predict_fn(model)

    ends = np.array([np.zeros(M, dtype=bool), np.ones(M, dtype=bool)])
    v_ends = _coalition_values(fn, x, background, subset, ends)
    phi0, f_x = float(v_ends[0]), float(v_ends[1])

    if M == 1:
        phi = np.zeros(x.shape[0])
        phi[subset[0]] = f_x - phi0
        return ShapExplanation(base_value=phi0, attributions=phi, model_output=f_x)

    full = 2 ** M - 2
    masks = (_pick_coalitions(M, full, seed) if coalition_budget >= full
             else _pick_coalitions(M, coalition_budget, seed))
    v = _coalition_values(fn, x, background, subset, masks)
    w = np.array([_kernel_weight(M, int(m.sum())) for m in masks])

    # eliminate the last unknown through the efficiency constraint
    Z = masks.astype(np.float64)
    y_t = v - phi0 - Z[:, -1] * (f_x - phi0)
    A = Z[:, :-1] - Z[:, -1:]
    AtW = A.T * w
    lhs = AtW @ A + 1e-10 * np.eye(M - 1)
    rhs = AtW @ y_t
    phi_head = np.linalg.solve(lhs, rhs)

    phi = np.zeros(x.shape[0])
    phi[subset[:-1]] = phi_head
    phi[subset[-1]] = (f_x - phi0) - float(phi_head.sum())
    return ShapExplanation(base_value=phi0, attributions=phi, model_output=f_x)


def partial_dependence_thresholds(model, samples, feature: str | int,
                                  grid_size: int = 20) -> DependenceCurve:
    """Mean prediction as one feature sweeps its observed range.

    Thresholds are the baseline crossings, linearly interpolated between
    grid points; the baseline is the mean unmodified prediction.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], LabeledSample):
        X, _ = samples_to_matrix(samples)
    else:
        X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    if isinstance(feature, str):
        fidx = FEATURE_NAMES.index(feature)
        fname = feature
    else:
        fidx = int(feature)
        fname = FEATURE_NAMES[fidx] if X.shape[1] == len(FEATURE_NAMES) else str(fidx)
    fn = _as_predict_fn(model)

    baseline = float(fn(X).mean())
    lo, hi = float(X[:, fidx].min()), float(X[:, fidx].max())
    if lo == hi:
        return DependenceCurve(feature=fname, grid=[lo],
                               values=[float(fn(X).mean())], baseline=baseline)
    grid = np.linspace(lo, hi, grid_size)
    values = []
    work = X.copy()
    for v in grid:
        work[:, fidx] = v
        values.append(float(fn(work).mean()))

    # a threshold is a sign change around the baseline; mere touching is not
    thresholds: list[float] = []
    deltas = [v - baseline for v in values]
    last_sign = 0.0
    last_idx = 0
    for i, d in enumerate(deltas):
        sign = float(np.sign(d))
        if sign == 0.0:
            continue
        if last_sign != 0.0 and sign != last_sign:
            a, b = deltas[last_idx], deltas[i]
            t = grid[last_idx] + (grid[i] - grid[last_idx]) * (-a) / (b - a)
            thresholds.append(float(t))
        last_sign, last_idx = sign, i
    return DependenceCurve(feature=fname, grid=[float(g) for g in grid],
                           values=values, baseline=baseline,
                           thresholds=thresholds)


@dataclass
class SummaryEntry:
    feature: str
    mean_abs_phi: float
    pairs: list[tuple[float, float]]  # (feature value, phi)


def shap_summary(explanations: Sequence[ShapExplanation], X: np.ndarray,
                 names: Sequence[str] = FEATURE_NAMES) -> list[SummaryEntry]:
    """Per-feature (value, phi) distributions ranked by mean |phi|.

    Ties rank by canonical feature order.
    """
    if not explanations:
        raise ValueError("need at least one explanation")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    phis = np.stack([e.attributions for e in explanations])
    mean_abs = np.abs(phis).mean(axis=0)
    order = sorted(range(len(names)), key=lambda i: (-mean_abs[i], i))
    return [SummaryEntry(
        feature=names[i],
        mean_abs_phi=float(mean_abs[i]),
        pairs=[(float(X[r, i]), float(phis[r, i])) for r in range(len(explanations))],
    ) for i in order]


def explanation_to_dict(e: ShapExplanation) -> dict:
    out = {
        "base_value": e.base_value,
        "attributions": [float(p) for p in e.attributions],
        "model_output": e.model_output,
    }
    if e.attempt_id is not None:
        out["attemptID"] = e.attempt_id
    if e.date_rel is not None:
        out["dateRel"] = e.date_rel
    return out


def explanation_from_dict(obj: dict) -> ShapExplanation:
    return ShapExplanation(
        base_value=obj["base_value"],
        attributions=np.array(obj["attributions"], dtype=np.float64),
        model_output=obj["model_output"],
        attempt_id=obj.get("attemptID"),
        date_rel=obj.get("dateRel"),
    )


def write_explanations_jsonl(explanations: Sequence[ShapExplanation]) -> bytes:
    lines = [json.dumps(explanation_to_dict(e), separators=(",", ":"))
             for e in explanations]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_explanations_jsonl(data: bytes) -> list[ShapExplanation]:
    return [explanation_from_dict(json.loads(line))
            for line in data.decode("utf-8").splitlines() if line.strip()]


def dependence_to_json(curve: DependenceCurve) -> bytes:
    return json.dumps({
        "feature": curve.feature,
        "grid": curve.grid,
        "values": curve.values,
        "baseline": curve.baseline,
        "thresholds": curve.thresholds,
    }, separators=(",", ":")).encode("utf-8")
