"""Expand attempt event streams into per-day activity records.

Each attempt becomes a gapless sequence of daily records from day 0 to
either the submission day or a cutoff horizon.  Days without events get an
empty activity list but still advance the inactive-day counter, so a model
sees one sample per attempt-day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable
from zoneinfo import ZoneInfo

from .ingest import SUBMIT_EVENT_TAGS, AttemptEventStream

DEFAULT_CUTOFF_DAYS = 28
DEFAULT_TZ = "UTC"

Event = tuple[str, int]  # (event tag, epoch seconds)


class PriorKnowledge(str, Enum):
    NOVICE = "Novice"
    EXPERT = "Expert"


class ScoreOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class PriorKnowledgeClass:
    student_id: str
    score: float
    knowledge: PriorKnowledge


@dataclass
class DailyActivityRecord:
    attempt_id: str
    date_rel: int
    activity_on_day: list[Event]
    inactive_days: int
    submission_day: int | None
    days_before_submit: int | None
    accumulated_activity: list[Event]  # submission event excluded
    did_submit: bool


def day_index(ts: int, start_ts: int, tz: str = DEFAULT_TZ) -> int:
    """Calendar-day offset of ts from start_ts in the given timezone."""
    zone = ZoneInfo(tz)
    d = datetime.fromtimestamp(ts, zone).date()
    d0 = datetime.fromtimestamp(start_ts, zone).date()
    return (d - d0).days


def classify_prior_knowledge(student_id: str, score: float) -> PriorKnowledgeClass:
    """Novice below a 50% preliminary score, Expert at 50% or above."""
    if not (0 <= score <= 100):
        raise ScoreOutOfRange(f"score {score} outside [0, 100]")
    knowledge = PriorKnowledge.NOVICE if score < 50 else PriorKnowledge.EXPERT
    return PriorKnowledgeClass(student_id=student_id, score=score, knowledge=knowledge)


def build_daily_records(stream: AttemptEventStream,
                        cutoff: int = DEFAULT_CUTOFF_DAYS,
                        tz: str = DEFAULT_TZ) -> list[DailyActivityRecord]:
    """Fill an attempt's timeline into daily records.

    Records run from day 0 through the submission day (if submitted) or the
    cutoff day.  ``accumulated_activity`` carries every event seen so far
    except the submission event itself; ``inactive_days`` counts strictly
    earlier days that had no events.  An empty stream yields no records.
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    if not stream.events:
        return []

    start_ts = stream.start_time
    submission_event: Event | None = None
    submission_day: int | None = None
    if stream.submitted:
        for tag, ts in reversed(stream.events):
            if tag in SUBMIT_EVENT_TAGS:
                submission_event = (tag, ts)
                break
        sub_ts = submission_event[1] if submission_event else stream.submission_time
        if sub_ts is not None:
            submission_day = max(0, day_index(sub_ts, start_ts, tz))

    last_day = submission_day if submission_day is not None else cutoff

    by_day: dict[int, list[Event]] = {}
    for idx, ev in enumerate(stream.events):
        # events slightly before startTime (tolerated clock skew) land on day 0
        d = max(0, day_index(ev[1], start_ts, tz))
        if d > last_day:
            continue
        by_day.setdefault(d, []).append(ev)

    records: list[DailyActivityRecord] = []
    accumulated: list[Event] = []
    inactive = 0
    for d in range(last_day + 1):
        todays = by_day.get(d, [])
        accumulated.extend(ev for ev in todays if ev != submission_event)
        records.append(DailyActivityRecord(
            attempt_id=stream.attempt_id,
            date_rel=d,
            activity_on_day=list(todays),
            inactive_days=inactive,
            submission_day=submission_day,
            days_before_submit=None if submission_day is None else submission_day - d,
            accumulated_activity=list(accumulated),
            did_submit=(submission_day is not None and d == submission_day),
        ))
        if not todays:
            inactive += 1
    return records


def effective_cutoff(start_ts: int, horizon: int = DEFAULT_CUTOFF_DAYS,
                     semester_end_ts: int | None = None, tz: str = DEFAULT_TZ) -> int:
    """Horizon in days, shortened to the semester end when one is given."""
    if semester_end_ts is None:
        return horizon
    return max(0, min(horizon, day_index(semester_end_ts, start_ts, tz)))


def record_to_dict(rec: DailyActivityRecord) -> dict:
    return {
        "attemptID": rec.attempt_id,
        "dateRel": rec.date_rel,
        "activityOnDay": [[tag, ts] for tag, ts in rec.activity_on_day],
        "inactiveDays": rec.inactive_days,
        "submissionDay": rec.submission_day,
        "daysBeforeSubmit": rec.days_before_submit,
        "accumulatedActivity": [[tag, ts] for tag, ts in rec.accumulated_activity],
        "didSubmit": rec.did_submit,
    }


def record_from_dict(obj: dict) -> DailyActivityRecord:
    return DailyActivityRecord(
        attempt_id=obj["attemptID"],
        date_rel=obj["dateRel"],
        activity_on_day=[(tag, ts) for tag, ts in obj["activityOnDay"]],
        inactive_days=obj["inactiveDays"],
        submission_day=obj["submissionDay"],
        days_before_submit=obj["daysBeforeSubmit"],
        accumulated_activity=[(tag, ts) for tag, ts in obj["accumulatedActivity"]],
        did_submit=obj["didSubmit"],
    )


def write_daily_jsonl(records: Iterable[DailyActivityRecord]) -> bytes:
    lines = [json.dumps(record_to_dict(r), separators=(",", ":")) for r in records]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_daily_jsonl(data: bytes) -> list[DailyActivityRecord]:
    return [record_from_dict(json.loads(line))
            for line in data.decode("utf-8").splitlines() if line.strip()]
