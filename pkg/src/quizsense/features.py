"""Per attempt-day feature vectors and engagement labels.

The model input is a fixed 16-slot vector per attempt-day: six local-time
activity-period counts, inactivity/attempt context, prior performance, and
six statistics of the gaps between consecutive accumulated events (in
hours).  The label is Engaged exactly on the submission day.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .ingest import QuizAttempt
from .preprocess import DEFAULT_TZ, DailyActivityRecord

FEATURE_NAMES: tuple[str, ...] = (
    "workday_morning_count",
    "workday_afternoon_count",
    "workday_evening_count",
    "weekend_morning_count",
    "weekend_afternoon_count",
    "weekend_evening_count",
    "days_inactive",
    "attemptnr",
    "previous_attempts",
    "previous_perf",
    "stat_min",
    "stat_mean",
    "stat_median",
    "stat_sd",
    "stat_skew",
    "stat_kurtosis",
)

# previous_perf when the student has no earlier submitted attempt
NO_HISTORY_PERF = 0.5


class Label(str, Enum):
    ENGAGED = "Engaged"
    DISENGAGED = "Disengaged"


class MissingDayRecord(KeyError):
    pass


class TooFewSamples(ValueError):
    pass


@dataclass(frozen=True)
class TemporalStats:
    stat_min: float
    stat_max: float  # diagnostics only; not part of the model vector
    stat_mean: float
    stat_median: float
    stat_sd: float
    stat_skew: float
    stat_kurtosis: float


@dataclass(frozen=True)
class FeatureVector:
    workday_morning_count: int
    workday_afternoon_count: int
    workday_evening_count: int
    weekend_morning_count: int
    weekend_afternoon_count: int
    weekend_evening_count: int
    days_inactive: int
    attemptnr: int
    previous_attempts: int
    previous_perf: float
    stat_min: float
    stat_mean: float
    stat_median: float
    stat_sd: float
    stat_skew: float
    stat_kurtosis: float
    # diagnostics, excluded from the model input
    stat_max: float = 0.0
    no_history: bool = False

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES],
                        dtype=np.float64)


@dataclass
class LabeledSample:
    attempt_id: str
    date_rel: int
    features: FeatureVector
    label: Label
    student_id: str | None = None

    @property
    def engaged(self) -> bool:
        return self.label is Label.ENGAGED


@dataclass
class CorrelationMatrix:
    names: list[str]
    values: np.ndarray
    constant_columns: list[str] = field(default_factory=list)


def temporal_stats(timestamps: Sequence[int]) -> TemporalStats:
    """Statistics of consecutive gaps, in hours.

    Fewer than one gap zeroes everything; skew/kurtosis are zero whenever
    there are fewer than 3 gaps or the gaps are all equal.
    """
    if len(timestamps) < 2:
        return TemporalStats(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    ts = np.asarray(timestamps, dtype=np.float64)
    deltas = np.diff(ts) / 3600.0
    n = deltas.size
    mean = float(deltas.mean())
    sd = float(deltas.std())  # population sd
    skew = 0.0
    kurt = 0.0
    if n >= 3 and sd > 0:
        centered = deltas - mean
        m2 = float(np.mean(centered ** 2))
        m3 = float(np.mean(centered ** 3))
        m4 = float(np.mean(centered ** 4))
        skew = m3 / m2 ** 1.5
        kurt = m4 / m2 ** 2 - 3.0
    return TemporalStats(
        stat_min=float(deltas.min()),
        stat_max=float(deltas.max()),
        stat_mean=mean,
        stat_median=float(np.median(deltas)),
        stat_sd=sd,
        stat_skew=skew,
        stat_kurtosis=kurt,
    )


def _period_slot(ts: int, zone: ZoneInfo) -> tuple[bool, int]:
    """(is_weekend, period) with period 0=morning 1=afternoon 2=evening."""
    local = datetime.fromtimestamp(ts, zone)
    weekend = local.weekday() >= 5
    h = local.hour
    if 5 <= h < 12:
        period = 0
    elif 12 <= h < 18:
        period = 1
    else:
        period = 2
    return weekend, period


def period_counts(events: Iterable[tuple[str, int]], tz: str = DEFAULT_TZ) -> tuple[int, ...]:
    """Six counts: (workday|weekend) x (morning|afternoon|evening).

    Morning [05,12), afternoon [12,18), evening [18,05) local; each event
    lands in exactly one bucket.
    """
    zone = ZoneInfo(tz)
    counts = [0, 0, 0, 0, 0, 0]
    for _tag, ts in events:
        weekend, period = _period_slot(ts, zone)
        counts[(3 if weekend else 0) + period] += 1
    return tuple(counts)


def previous_performance(history: Sequence[QuizAttempt]) -> tuple[float, bool]:
    """Mean fraction scored over earlier submitted attempts; neutral default."""
    scores = [a.points / a.max_points for a in history
              if a.submitted and a.points is not None and a.max_points > 0]
    if not scores:
        return NO_HISTORY_PERF, True
    return float(np.mean(scores)), False


def assemble_feature_vector(records: Sequence[DailyActivityRecord], t: int,
                            attempt: QuizAttempt,
                            student_history: Sequence[QuizAttempt],
                            tz: str = DEFAULT_TZ) -> FeatureVector:
    """Feature vector for day t of one attempt.

    ``student_history`` holds the same student's attempts that started
    before this one (any course/quiz, any status).
    """
    if t < 0 or t >= len(records) or records[t].date_rel != t:
        raise MissingDayRecord(f"no day-{t} record for attempt {attempt.attempt_id!r}")
    rec = records[t]
    counts = period_counts(rec.accumulated_activity, tz)
    stats = temporal_stats([ts for _tag, ts in rec.accumulated_activity])
    perf, no_history = previous_performance(student_history)
    return FeatureVector(
        workday_morning_count=counts[0],
        workday_afternoon_count=counts[1],
        workday_evening_count=counts[2],
        weekend_morning_count=counts[3],
        weekend_afternoon_count=counts[4],
        weekend_evening_count=counts[5],
        days_inactive=rec.inactive_days,
        attemptnr=attempt.attempt_no,
        previous_attempts=len(student_history),
        previous_perf=perf,
        stat_min=stats.stat_min,
        stat_mean=stats.stat_mean,
        stat_median=stats.stat_median,
        stat_sd=stats.stat_sd,
        stat_skew=stats.stat_skew,
        stat_kurtosis=stats.stat_kurtosis,
        stat_max=stats.stat_max,
        no_history=no_history,
    )


def label_sample(record: DailyActivityRecord) -> Label:
    return Label.ENGAGED if record.did_submit else Label.DISENGAGED


def build_labeled_samples(attempt: QuizAttempt,
                          records: Sequence[DailyActivityRecord],
                          student_history: Sequence[QuizAttempt],
                          student_id: str | None = None,
                          tz: str = DEFAULT_TZ) -> list[LabeledSample]:
    """One labeled sample per daily record of the attempt."""
    samples = []
    for rec in records:
        fv = assemble_feature_vector(records, rec.date_rel, attempt,
                                     student_history, tz)
        samples.append(LabeledSample(
            attempt_id=attempt.attempt_id,
            date_rel=rec.date_rel,
            features=fv,
            label=label_sample(rec),
            student_id=student_id,
        ))
    return samples


def samples_to_matrix(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) with X shaped (n, 16) in FEATURE_NAMES order; y 1=Engaged."""
    X = np.stack([s.features.to_array() for s in samples]) if samples else \
        np.empty((0, len(FEATURE_NAMES)))
    y = np.array([1.0 if s.engaged else 0.0 for s in samples], dtype=np.float64)
    return X, y


def feature_correlation_matrix(samples: Sequence[LabeledSample]) -> CorrelationMatrix:
    """Pearson correlations over features plus the did_submit target.

    Constant columns correlate 0 with everything (diagonal stays 1) and are
    listed in ``constant_columns``.
    """
    if len(samples) < 2:
        raise TooFewSamples(f"need >= 2 samples, got {len(samples)}")
    X, y = samples_to_matrix(samples)
    data = np.column_stack([X, y])
    names = list(FEATURE_NAMES) + ["did_submit"]
    centered = data - data.mean(axis=0)
    sd = centered.std(axis=0)
    constant = sd == 0
    safe_sd = np.where(constant, 1.0, sd)
    normed = centered / safe_sd
    corr = normed.T @ normed / data.shape[0]
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    corr = np.clip(corr, -1.0, 1.0)
    return CorrelationMatrix(
        names=names,
        values=corr,
        constant_columns=[n for n, c in zip(names, constant) if c],
    )


def sample_to_dict(s: LabeledSample) -> dict:
    row = {"attemptID": s.attempt_id, "dateRel": s.date_rel}
    if s.student_id is not None:
        row["studentID"] = s.student_id
    for name in FEATURE_NAMES:
        row[name] = getattr(s.features, name)
    row["stat_max"] = s.features.stat_max
    row["no_history"] = s.features.no_history
    row["label"] = s.label.value
    return row


def sample_from_dict(obj: dict) -> LabeledSample:
    fv = FeatureVector(**{name: obj[name] for name in FEATURE_NAMES},
                       stat_max=obj.get("stat_max", 0.0),
                       no_history=obj.get("no_history", False))
    return LabeledSample(
        attempt_id=obj["attemptID"],
        date_rel=obj["dateRel"],
        features=fv,
        label=Label(obj["label"]),
        student_id=obj.get("studentID"),
    )


def write_features_jsonl(samples: Iterable[LabeledSample]) -> bytes:
    lines = [json.dumps(sample_to_dict(s), separators=(",", ":")) for s in samples]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_features_jsonl(data: bytes) -> list[LabeledSample]:
    return [sample_from_dict(json.loads(line))
            for line in data.decode("utf-8").splitlines() if line.strip()]


def correlation_to_json(corr: CorrelationMatrix) -> bytes:
    payload = {
        "names": corr.names,
        "values": [[round(float(v), 10) for v in row] for row in corr.values],
        "constant_columns": corr.constant_columns,
    }
    return json.dumps(payload, separators=(",", ":")).encode("utf-8")
