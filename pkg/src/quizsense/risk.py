"""Behavior flags and disengagement risk tiers from Shapley attributions.

Negative attribution mass on the six activity counts marks erratic
behavior, on days_inactive delayed behavior, and on stat_mean+stat_sd
irregular behavior.  The tier mapping is total over the eight flag
combinations: both erratic and delayed is High, exactly one of them is
Medium, irregular alone is Low, nothing flagged is Engaged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .explain import ShapExplanation
from .features import FEATURE_NAMES

COUNT_FEATURES = (
    "workday_morning_count", "workday_afternoon_count", "workday_evening_count",
    "weekend_morning_count", "weekend_afternoon_count", "weekend_evening_count",
)
_COUNT_IDX = [FEATURE_NAMES.index(n) for n in COUNT_FEATURES]
_INACTIVE_IDX = FEATURE_NAMES.index("days_inactive")
_STAT_IDX = [FEATURE_NAMES.index("stat_mean"), FEATURE_NAMES.index("stat_sd")]
_PREV_PERF_IDX = FEATURE_NAMES.index("previous_perf")


class RiskLevel(str, Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    ENGAGED = "Engaged"


class MissingAttribution(ValueError):
    pass


@dataclass(frozen=True)
class BehaviorFlags:
    erratic: bool
    delayed: bool
    irregular: bool
    count_shap_sum: float
    inactive_shap: float
    stat_shap_sum: float
    prev_perf_shap: float = 0.0  # diagnostic only; not part of any rule


@dataclass
class RiskAssessment:
    attempt_id: str | None
    date_rel: int | None
    flags: BehaviorFlags
    level: RiskLevel
    model_prediction: float


def behavior_flags(explanation: ShapExplanation) -> BehaviorFlags:
    """Flags from attribution sums; sums of exactly zero leave the flag off."""
    phi = explanation.attributions
    if phi.shape[0] != len(FEATURE_NAMES):
        raise MissingAttribution(
            f"expected {len(FEATURE_NAMES)} attributions, got {phi.shape[0]}")
    count_sum = float(phi[_COUNT_IDX].sum())
    inactive = float(phi[_INACTIVE_IDX])
    stat_sum = float(phi[_STAT_IDX].sum())
    return BehaviorFlags(
        erratic=count_sum < 0,
        delayed=inactive < 0,
        irregular=stat_sum < 0,
        count_shap_sum=count_sum,
        inactive_shap=inactive,
        stat_shap_sum=stat_sum,
        prev_perf_shap=float(phi[_PREV_PERF_IDX]),
    )


def risk_level(flags: BehaviorFlags) -> RiskLevel:
    if flags.erratic and flags.delayed:
        return RiskLevel.HIGH
    if flags.erratic or flags.delayed:
        return RiskLevel.MEDIUM
    if flags.irregular:
        return RiskLevel.LOW
    return RiskLevel.ENGAGED


def assess(explanation: ShapExplanation, prediction: float | None = None) -> RiskAssessment:
    flags = behavior_flags(explanation)
    return RiskAssessment(
        attempt_id=explanation.attempt_id,
        date_rel=explanation.date_rel,
        flags=flags,
        level=risk_level(flags),
        model_prediction=float(prediction if prediction is not None
                               else explanation.model_output),
    )


LEVEL_ORDER = (RiskLevel.HIGH, RiskLevel.MEDIUM, RiskLevel.LOW, RiskLevel.ENGAGED)


def cohort_risk_summary(assessments: Sequence[RiskAssessment],
                        predictions: Sequence[float] | None = None) -> dict:
    """Per-level sample and predicted-disengaged counts.

    Predictions default to each assessment's stored model probability;
    predicted disengaged means probability < 0.5.
    """
    if predictions is not None and len(predictions) != len(assessments):
        raise ValueError("assessments and predictions must align")
    rows = {level.value: {"samples": 0, "predicted_disengaged": 0}
            for level in LEVEL_ORDER}
    for i, a in enumerate(assessments):
        p = predictions[i] if predictions is not None else a.model_prediction
        rows[a.level.value]["samples"] += 1
        if p < 0.5:
            rows[a.level.value]["predicted_disengaged"] += 1
    return rows


def assessment_to_dict(a: RiskAssessment) -> dict:
    return {
        "attemptID": a.attempt_id,
        "dateRel": a.date_rel,
        "level": a.level.value,
        "model_prediction": a.model_prediction,
        "flags": {
            "erratic": a.flags.erratic,
            "delayed": a.flags.delayed,
            "irregular": a.flags.irregular,
            "count_shap_sum": a.flags.count_shap_sum,
            "inactive_shap": a.flags.inactive_shap,
            "stat_shap_sum": a.flags.stat_shap_sum,
            "prev_perf_shap": a.flags.prev_perf_shap,
        },
    }


def assessment_from_dict(obj: dict) -> RiskAssessment:
    f = obj["flags"]
    flags = BehaviorFlags(
        erratic=f["erratic"], delayed=f["delayed"], irregular=f["irregular"],
        count_shap_sum=f["count_shap_sum"], inactive_shap=f["inactive_shap"],
        stat_shap_sum=f["stat_shap_sum"],
        prev_perf_shap=f.get("prev_perf_shap", 0.0),
    )
    return RiskAssessment(
        attempt_id=obj.get("attemptID"),
        date_rel=obj.get("dateRel"),
        flags=flags,
        level=RiskLevel(obj["level"]),
        model_prediction=obj["model_prediction"],
    )


def write_risk_jsonl(assessments: Sequence[RiskAssessment]) -> bytes:
    lines = [json.dumps(assessment_to_dict(a), separators=(",", ":"))
             for a in assessments]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_risk_jsonl(data: bytes) -> list[RiskAssessment]:
    return [assessment_from_dict(json.loads(line))
            for line in data.decode("utf-8").splitlines() if line.strip()]


def risk_summary_to_json(summary: dict) -> bytes:
    return json.dumps(summary, separators=(",", ":"), sort_keys=True).encode("utf-8")
