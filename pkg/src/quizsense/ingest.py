"""Parse LMS quiz/log exports and join them into per-attempt event streams.

Input files are the two Moodle-style tables: a quiz table (one row per
attempt) and a logs table (one row per interaction).  Both are accepted
as CSV (RFC 4180) or JSONL with case-insensitive column names; timestamps
may be integer epoch-seconds or RFC-3339 strings and are normalized to
epoch-seconds.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable

# Events this many seconds before the attempt's startTime are tolerated
# silently; anything earlier is counted as an early-event warning but kept.
CLOCK_SKEW_TOLERANCE_S = 60

COMPONENT_QUIZ = "quiz"
COMPONENT_MODULE = "module"

SUBMIT_EVENT_TAGS = {"submit", "submitted", "submission"}


class QuizStatus(str, Enum):
    IN_PROGRESS = "inprogress"
    SUBMITTED = "submitted"


class IngestError(Exception):
    """Base class for ingest failures."""


class EncodingError(IngestError):
    pass


class MissingColumnError(IngestError):
    def __init__(self, name: str, table: str = ""):
        self.name = name
        self.table = table
        super().__init__(f"missing column {name!r}" + (f" in {table} table" if table else ""))


class RowInvariantViolation(IngestError):
    def __init__(self, row: int, reason: str):
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class TimestampParseError(IngestError):
    def __init__(self, row: int, value: object):
        self.row = row
        self.value = value
        super().__init__(f"row {row}: unparseable timestamp {value!r}")


@dataclass(frozen=True)
class QuizAttempt:
    quiz_id: str
    course_id: str
    attempt_id: str
    attempt_no: int
    start_time: int
    end_time: int | None
    quiz_status: QuizStatus
    max_points: float
    points: float | None

    @property
    def submitted(self) -> bool:
        return self.quiz_status is QuizStatus.SUBMITTED


@dataclass(frozen=True)
class LogEvent:
    student_id: str
    course_id: str
    object_id: str
    component: str  # normalized lowercase; "quiz", "module", or raw other
    event: str
    timestamp: int
    origin: str  # "web", "mobile", or raw other

    @property
    def is_quiz(self) -> bool:
        return self.component == COMPONENT_QUIZ


@dataclass
class AttemptEventStream:
    attempt_id: str
    student_id: str | None
    course_id: str
    quiz_id: str
    events: list[tuple[str, int]]  # (event tag, epoch seconds), time-ordered
    submitted: bool
    submission_time: int | None
    start_time: int


@dataclass
class JoinReport:
    matched_events: int = 0
    dangling_events: int = 0
    attempts_without_events: int = 0
    course_mismatches: int = 0
    early_events: int = 0  # events earlier than startTime - tolerance (kept)


@dataclass
class ParseResult:
    """Parsed rows plus per-row issues (invalid rows are skipped)."""

    records: list
    issues: list[IngestError] = field(default_factory=list)


QUIZ_COLUMNS = (
    "quizid", "courseid", "attemptid", "attemptno", "starttime",
    "endtime", "quizstatus", "maxpoints", "points",
)
QUIZ_OPTIONAL = {"endtime", "points"}
LOG_COLUMNS = (
    "studentid", "courseid", "objectid", "component", "event",
    "timestamp", "origin",
)

# Canonical serialization headers (Table-style names).
QUIZ_HEADER = (
    "quizID", "courseID", "attemptID", "attemptNo", "startTime",
    "endTime", "quizStatus", "maxPoints", "points",
)
LOG_HEADER = (
    "studentID", "courseID", "objectID", "component", "event",
    "timestamp", "origin",
)

_STATUS_ALIASES = {
    "inprogress": QuizStatus.IN_PROGRESS,
    "in-progress": QuizStatus.IN_PROGRESS,
    "in_progress": QuizStatus.IN_PROGRESS,
    "in progress": QuizStatus.IN_PROGRESS,
    "submitted": QuizStatus.SUBMITTED,
    "finished": QuizStatus.SUBMITTED,
}


def _norm_column(name: str) -> str:
    return name.strip().lower().replace("_", "").replace("-", "").replace(" ", "")


def parse_timestamp(value: object) -> int:
    """Normalize an epoch-seconds number or RFC-3339 string to epoch seconds."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, (int, float)):
        return int(value)
    text = str(value).strip()
    if not text:
        raise ValueError("empty timestamp")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return int(float(text))
    except ValueError:
        pass
    iso = text.replace("Z", "+00:00").replace("z", "+00:00")
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError as exc:
        raise ValueError(f"not epoch seconds or RFC-3339: {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _decode(source) -> str:
    if isinstance(source, (str, Path)) and Path(source).exists():
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        data = source.encode("utf-8")
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    else:
        raise TypeError(f"unsupported source type: {type(source)!r}")
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8: {exc}") from exc


def _iter_rows(text: str, fmt: str, columns: tuple[str, ...], optional: set[str],
               table: str) -> Iterable[dict]:
    """Yield dicts keyed by normalized column name; raises MissingColumnError."""
    fmt = fmt.strip().lower()
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnError(columns[0], table)
        mapping = {}
        for idx, name in enumerate(header):
            mapping[_norm_column(name)] = idx
        for col in columns:
            if col not in mapping:
                raise MissingColumnError(col, table)
        for raw in reader:
            if not raw or all(not cell.strip() for cell in raw):
                continue
            row = {}
            for col in columns:
                idx = mapping[col]
                cell = raw[idx].strip() if idx < len(raw) else ""
                row[col] = cell if cell != "" else None
            yield row
    elif fmt == "jsonl":
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            normed = {_norm_column(k): v for k, v in obj.items()}
            row = {}
            for col in columns:
                if col not in normed:
                    if col in optional:
                        row[col] = None
                        continue
                    raise MissingColumnError(col, table)
                val = normed[col]
                row[col] = None if val in ("", None) else val
            yield row
    else:
        raise ValueError(f"unknown format {fmt!r}; expected csv or jsonl")


def parse_quiz_table(source, format: str = "csv", *, strict: bool = False) -> ParseResult:
    """Parse the quiz table into QuizAttempt records.

    Invalid rows are skipped and reported in ``result.issues`` with their
    0-based data-row index; with ``strict=True`` the first issue raises.
    """
    text = _decode(source)
    result = ParseResult(records=[])
    seen_ids: set[str] = set()

    def fail(issue: IngestError):
        if strict:
            raise issue
        result.issues.append(issue)

    for row_idx, row in enumerate(_iter_rows(text, format, QUIZ_COLUMNS, QUIZ_OPTIONAL, "quiz")):
        try:
            attempt = _quiz_row_to_attempt(row, row_idx)
        except IngestError as exc:
            fail(exc)
            continue
        if attempt.attempt_id in seen_ids:
            fail(RowInvariantViolation(row_idx, f"duplicate attemptID {attempt.attempt_id!r}"))
            continue
        seen_ids.add(attempt.attempt_id)
        result.records.append(attempt)
    return result


def _quiz_row_to_attempt(row: dict, row_idx: int) -> QuizAttempt:
    for col in ("quizid", "courseid", "attemptid", "attemptno", "starttime",
                "quizstatus", "maxpoints"):
        if row[col] is None:
            raise RowInvariantViolation(row_idx, f"empty required field {col!r}")
    status_raw = str(row["quizstatus"]).strip().lower()
    status = _STATUS_ALIASES.get(status_raw)
    if status is None:
        raise RowInvariantViolation(row_idx, f"unknown quizStatus {row['quizstatus']!r}")
    try:
        attempt_no = int(row["attemptno"])
    except (TypeError, ValueError):
        raise RowInvariantViolation(row_idx, f"attemptNo not an integer: {row['attemptno']!r}")
    if attempt_no < 1:
        raise RowInvariantViolation(row_idx, f"attemptNo must be >= 1, got {attempt_no}")
    try:
        start_time = parse_timestamp(row["starttime"])
    except ValueError:
        raise TimestampParseError(row_idx, row["starttime"])
    end_time = None
    if row["endtime"] is not None:
        try:
            end_time = parse_timestamp(row["endtime"])
        except ValueError:
            raise TimestampParseError(row_idx, row["endtime"])
    try:
        max_points = float(row["maxpoints"])
    except (TypeError, ValueError):
        raise RowInvariantViolation(row_idx, f"maxPoints not numeric: {row['maxpoints']!r}")
    if max_points < 0:
        raise RowInvariantViolation(row_idx, f"maxPoints must be >= 0, got {max_points}")
    points = None
    if row["points"] is not None:
        try:
            points = float(row["points"])
        except (TypeError, ValueError):
            raise RowInvariantViolation(row_idx, f"points not numeric: {row['points']!r}")
    if status is QuizStatus.SUBMITTED:
        if end_time is None:
            raise RowInvariantViolation(row_idx, "submitted attempt without endTime")
        if end_time < start_time:
            raise RowInvariantViolation(row_idx, "endTime earlier than startTime")
    if points is not None and not (0 <= points <= max_points):
        raise RowInvariantViolation(
            row_idx, f"points {points} outside [0, {max_points}]")
    return QuizAttempt(
        quiz_id=str(row["quizid"]),
        course_id=str(row["courseid"]),
        attempt_id=str(row["attemptid"]),
        attempt_no=attempt_no,
        start_time=start_time,
        end_time=end_time,
        quiz_status=status,
        max_points=max_points,
        points=points,
    )


def parse_log_table(source, format: str = "csv", *, strict: bool = False) -> ParseResult:
    """Parse the logs table into LogEvent records.

    Unknown component/origin strings are lowercased and retained as-is.
    """
    text = _decode(source)
    result = ParseResult(records=[])

    def fail(issue: IngestError):
        if strict:
            raise issue
        result.issues.append(issue)

    for row_idx, row in enumerate(_iter_rows(text, format, LOG_COLUMNS, set(), "logs")):
        missing = [c for c in LOG_COLUMNS if row[c] is None]
        if missing:
            fail(RowInvariantViolation(row_idx, f"empty required field {missing[0]!r}"))
            continue
        try:
            ts = parse_timestamp(row["timestamp"])
        except ValueError:
            fail(TimestampParseError(row_idx, row["timestamp"]))
            continue
        result.records.append(LogEvent(
            student_id=str(row["studentid"]),
            course_id=str(row["courseid"]),
            object_id=str(row["objectid"]),
            component=str(row["component"]).strip().lower(),
            event=str(row["event"]).strip().lower(),
            timestamp=ts,
            origin=str(row["origin"]).strip().lower(),
        ))
    return result


def write_quiz_table(records: Iterable[QuizAttempt], format: str = "csv") -> bytes:
    fmt = format.strip().lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(QUIZ_HEADER)
        for r in records:
            writer.writerow([
                r.quiz_id, r.course_id, r.attempt_id, r.attempt_no, r.start_time,
                "" if r.end_time is None else r.end_time,
                r.quiz_status.value, _fmt_num(r.max_points),
                "" if r.points is None else _fmt_num(r.points),
            ])
        return buf.getvalue().encode("utf-8")
    if fmt == "jsonl":
        lines = []
        for r in records:
            lines.append(json.dumps({
                "quizID": r.quiz_id, "courseID": r.course_id,
                "attemptID": r.attempt_id, "attemptNo": r.attempt_no,
                "startTime": r.start_time, "endTime": r.end_time,
                "quizStatus": r.quiz_status.value, "maxPoints": r.max_points,
                "points": r.points,
            }, separators=(",", ":")))
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise ValueError(f"unknown format {format!r}")


def write_log_table(records: Iterable[LogEvent], format: str = "csv") -> bytes:
    fmt = format.strip().lower()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(LOG_HEADER)
        for r in records:
            writer.writerow([
                r.student_id, r.course_id, r.object_id, r.component,
                r.event, r.timestamp, r.origin,
            ])
        return buf.getvalue().encode("utf-8")
    if fmt == "jsonl":
        lines = []
        for r in records:
            lines.append(json.dumps({
                "studentID": r.student_id, "courseID": r.course_id,
                "objectID": r.object_id, "component": r.component,
                "event": r.event, "timestamp": r.timestamp, "origin": r.origin,
            }, separators=(",", ":")))
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise ValueError(f"unknown format {format!r}")


def _fmt_num(x: float) -> str:
    # 10.0 -> "10", 8.5 -> "8.5"; keeps CSV round-trips stable
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def join_attempt_events(attempts: list[QuizAttempt],
                        logs: list[LogEvent]) -> tuple[list[AttemptEventStream], JoinReport]:
    """Join quiz-component log events onto attempts by objectID == attemptID.

    Total over attempts: every attempt yields a stream, possibly with an
    empty event list.  Event order is deterministic under input permutation
    (timestamp, then event tag, then original input index).
    """
    report = JoinReport()
    by_attempt = {a.attempt_id: a for a in attempts}
    buckets: dict[str, list[tuple[int, str, int]]] = {a.attempt_id: [] for a in attempts}
    student_by_attempt: dict[str, str] = {}

    for idx, ev in enumerate(logs):
        if not ev.is_quiz:
            continue
        attempt = by_attempt.get(ev.object_id)
        if attempt is None:
            report.dangling_events += 1
            continue
        report.matched_events += 1
        if ev.course_id != attempt.course_id:
            report.course_mismatches += 1
        if ev.timestamp < attempt.start_time - CLOCK_SKEW_TOLERANCE_S:
            report.early_events += 1
        buckets[ev.object_id].append((ev.timestamp, ev.event, idx))
        student_by_attempt.setdefault(ev.object_id, ev.student_id)

    streams: list[AttemptEventStream] = []
    for attempt in attempts:
        entries = sorted(buckets[attempt.attempt_id])
        events = [(tag, ts) for ts, tag, _ in entries]
        if not events:
            report.attempts_without_events += 1
        submission_time = None
        if attempt.submitted:
            submit_times = [ts for tag, ts in events if tag in SUBMIT_EVENT_TAGS]
            submission_time = submit_times[-1] if submit_times else attempt.end_time
        streams.append(AttemptEventStream(
            attempt_id=attempt.attempt_id,
            student_id=student_by_attempt.get(attempt.attempt_id),
            course_id=attempt.course_id,
            quiz_id=attempt.quiz_id,
            events=events,
            submitted=attempt.submitted,
            submission_time=submission_time,
            start_time=attempt.start_time,
        ))
    return streams, report
