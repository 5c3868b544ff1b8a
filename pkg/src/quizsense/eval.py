"""Classification metrics, ROC/AUC, and cohort-level activity reports.

Engaged is the positive class throughout.  AUC uses the rank (Mann-Whitney)
formulation, which handles score ties exactly; a threshold-sweep ROC curve
with trapezoidal integration is provided as an independent cross-check.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .ingest import AttemptEventStream, QuizAttempt
from .preprocess import DEFAULT_TZ
from .semesters import SemesterCalendar


class LengthMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class SingleClassInput(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


@dataclass
class MetricsReport:
    ppv: float
    npv: float
    tpr: float
    tnr: float
    fpr: float
    fnr: float
    f1_engaged: float
    f1_disengaged: float
    ba: float
    auc: float | None = None
    zero_denominators: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "PPV": self.ppv, "NPV": self.npv, "TPR": self.tpr, "TNR": self.tnr,
            "FPR": self.fpr, "FNR": self.fnr, "F1_engaged": self.f1_engaged,
            "F1_disengaged": self.f1_disengaged, "BA": self.ba,
        }
        if self.auc is not None:
            out["AUC"] = self.auc
        if self.zero_denominators:
            out["zero_denominators"] = self.zero_denominators
        return out


def _safe_div(num: float, den: float, name: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def balanced_accuracy(tpr: float, tnr: float) -> float:
    return (tpr + tnr) / 2


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def confusion_counts(labels: Sequence[int], predictions: Sequence[int]) -> ConfusionCounts:
    if len(labels) != len(predictions):
        raise LengthMismatch(f"{len(labels)} labels vs {len(predictions)} predictions")
    if len(labels) == 0:
        raise EmptyInput("no samples")
    y = np.asarray(labels, dtype=bool)
    p = np.asarray(predictions, dtype=bool)
    return ConfusionCounts(
        tp=int(np.sum(y & p)),
        fp=int(np.sum(~y & p)),
        tn=int(np.sum(~y & ~p)),
        fn=int(np.sum(y & ~p)),
    )


def metrics_from_counts(c: ConfusionCounts) -> MetricsReport:
    flags: list[str] = []
    ppv = _safe_div(c.tp, c.tp + c.fp, "PPV", flags)
    npv = _safe_div(c.tn, c.tn + c.fn, "NPV", flags)
    tpr = _safe_div(c.tp, c.tp + c.fn, "TPR", flags)
    tnr = _safe_div(c.tn, c.tn + c.fp, "TNR", flags)
    return MetricsReport(
        ppv=ppv, npv=npv, tpr=tpr, tnr=tnr,
        fpr=1 - tnr, fnr=1 - tpr,
        f1_engaged=f1_score(ppv, tpr),
        f1_disengaged=f1_score(npv, tnr),
        ba=balanced_accuracy(tpr, tnr),
        zero_denominators=flags,
    )


def classification_metrics(labels: Sequence[int],
                           predictions: Sequence[int]) -> tuple[ConfusionCounts, MetricsReport]:
    counts = confusion_counts(labels, predictions)
    return counts, metrics_from_counts(counts)


def roc_auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """P(score+ > score-) + half the tie probability, via average ranks."""
    if len(labels) != len(scores):
        raise LengthMismatch(f"{len(labels)} labels vs {len(scores)} scores")
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("need both classes for AUC")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(ranks[y].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def roc_curve(labels: Sequence[int],
              scores: Sequence[float]) -> list[tuple[float, float, float]]:
    """(threshold, FPR, TPR) at every distinct score, positive iff score >= t."""
    y = np.asarray(labels, dtype=bool)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("need both classes for a ROC curve")
    order = np.argsort(-s, kind="mergesort")
    points: list[tuple[float, float, float]] = [(float("inf"), 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        thr = s[order[i]]
        while j < len(s) and s[order[j]] == thr:
            if y[order[j]]:
                tp += 1
            else:
                fp += 1
            j += 1
        points.append((float(thr), fp / n_neg, tp / n_pos))
        i = j
    return points


def auc_trapezoid(points: Sequence[tuple[float, float, float]]) -> float:
    """Trapezoidal area under a (threshold, FPR, TPR) sweep."""
    area = 0.0
    for (_, x0, y0), (_, x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


@dataclass
class CohortReport:
    weekly_activity: dict[str, dict[str, int]]  # semester tag -> ISO week -> events
    grade_bins: list[dict]                      # grade, n_students, mean_submission_rate
    grades_available: bool

    def to_json(self) -> bytes:
        return json.dumps({
            "weekly_activity": self.weekly_activity,
            "grade_bins": self.grade_bins,
            "grades_available": self.grades_available,
        }, separators=(",", ":"), sort_keys=True).encode("utf-8")


def cohort_reports(streams: Sequence[AttemptEventStream],
                   attempts: Sequence[QuizAttempt],
                   grades: Mapping[str, float] | None = None,
                   calendar: SemesterCalendar | None = None,
                   tz: str = DEFAULT_TZ) -> CohortReport:
    """Weekly interaction histogram per semester plus engagement-vs-grade bins."""
    zone = ZoneInfo(tz)
    weekly: dict[str, dict[str, int]] = {}
    for stream in streams:
        for _tag, ts in stream.events:
            sem = calendar.tag_for(ts) if calendar else None
            sem = sem if sem is not None else "untagged"
            iso = datetime.fromtimestamp(ts, zone).isocalendar()
            week = f"{iso.year}-W{iso.week:02d}"
            weekly.setdefault(sem, {})[week] = weekly.get(sem, {}).get(week, 0) + 1

    grade_bins: list[dict] = []
    grades_available = bool(grades)
    if grades_available:
        submitted: dict[str, int] = {}
        total: dict[str, int] = {}
        student_of = {s.attempt_id: s.student_id for s in streams}
        for att in attempts:
            sid = student_of.get(att.attempt_id)
            if sid is None:
                continue
            total[sid] = total.get(sid, 0) + 1
            if att.submitted:
                submitted[sid] = submitted.get(sid, 0) + 1
        by_grade: dict[int, list[float]] = {}
        for sid, grade in grades.items():
            if sid not in total:
                continue
            rate = submitted.get(sid, 0) / total[sid]
            by_grade.setdefault(int(round(grade)), []).append(rate)
        for grade in sorted(by_grade):
            rates = by_grade[grade]
            grade_bins.append({
                "grade": grade,
                "n_students": len(rates),
                "mean_submission_rate": float(np.mean(rates)),
            })
    return CohortReport(weekly_activity=weekly, grade_bins=grade_bins,
                        grades_available=grades_available)


def metrics_to_json(report: MetricsReport, counts: ConfusionCounts | None = None) -> bytes:
    payload = report.to_dict()
    if counts is not None:
        payload["confusion"] = {"TP": counts.tp, "FP": counts.fp,
                                "TN": counts.tn, "FN": counts.fn}
    return json.dumps(payload, separators=(",", ":"), sort_keys=True).encode("utf-8")


def roc_to_csv(points: Sequence[tuple[float, float, float]]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "fpr", "tpr"])
    for thr, fpr, tpr in points:
        writer.writerow([("inf" if thr == float("inf") else repr(thr)), repr(fpr), repr(tpr)])
    return buf.getvalue().encode("utf-8")
