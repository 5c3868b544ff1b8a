"""Seeded synthetic cohort generator with planted behavioral archetypes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from .ingest import (
    LogEvent,
    QuizAttempt,
    QuizStatus,
    write_log_table,
    write_quiz_table,
)
from .semesters import SemesterCalendar

EPOCH_BASE = 1_546_819_200  # 2019-01-07 00:00 UTC, a Monday
DAY = 86_400

# hour windows events may land in, per period slot
_PERIOD_HOURS = ((7.0, 11.5), (12.5, 17.5), (18.0, 23.3))

# gap regimes (hours): regular browsing, ambiguous short sessions, and the
# tight completion burst that precedes a submission
_REGULAR_GAP_MIN = 0.30
_MINI_BURST_RANGE = (0.15, 0.30)
_WEAK_BURST_RANGE = (0.10, 0.22)
_BURST_RANGE = (0.02, 0.08)
_MINI_BURST_PROB = 0.08
_WEAK_BURST_PROB = 0.05


class InvalidProportions(ValueError):
    pass


class Archetype(str, Enum):
    ENGAGED_REGULAR = "EngagedRegular"
    ERRATIC = "Erratic"
    DELAYED = "Delayed"
    IRREGULAR = "Irregular"
    ERRATIC_DELAYED = "ErraticDelayed"


@dataclass(frozen=True)
class ArchetypeConfig:
    kind: Archetype
    weekday_active: float
    weekend_active: float
    weekday_periods: tuple[float, float, float]
    weekend_periods: tuple[float, float, float]
    events_per_day: tuple[int, int]
    gap_median_hours: float
    gap_sigma: float
    submit_prob: float
    first_day: tuple[int, int]
    submit_day: tuple[int, int]
    abandon_after: tuple[int, int]
    score_range: tuple[float, float]
    prefer_weekend_submit: bool = False

    def __post_init__(self):
        for p in (self.weekday_active, self.weekend_active, self.submit_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")
        for weights in (self.weekday_periods, self.weekend_periods):
            if any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ValueError("period weights must be non-negative, not all zero")
        if self.gap_median_hours <= 0 or self.gap_sigma < 0:
            raise ValueError("gap distribution parameters must be positive")
        for lo, hi in (self.events_per_day, self.first_day, self.submit_day,
                       self.abandon_after):
            if lo > hi or lo < 0:
                raise ValueError(f"range ({lo}, {hi}) invalid")


DEFAULT_ARCHETYPES: dict[Archetype, ArchetypeConfig] = {
    Archetype.ENGAGED_REGULAR: ArchetypeConfig(
        kind=Archetype.ENGAGED_REGULAR,
        weekday_active=0.97, weekend_active=0.90,
        weekday_periods=(0.35, 0.35, 0.30), weekend_periods=(0.30, 0.35, 0.35),
        events_per_day=(2, 4), gap_median_hours=0.5, gap_sigma=0.8,
        submit_prob=0.97, first_day=(0, 0), submit_day=(4, 8),
        abandon_after=(1, 3), score_range=(7.0, 10.0)),
    Archetype.ERRATIC: ArchetypeConfig(
        kind=Archetype.ERRATIC,
        weekday_active=0.15, weekend_active=0.92,
        weekday_periods=(0.10, 0.20, 0.70), weekend_periods=(0.05, 0.15, 0.80),
        events_per_day=(1, 3), gap_median_hours=0.6, gap_sigma=1.0,
        submit_prob=0.50, first_day=(0, 2), submit_day=(4, 9),
        abandon_after=(1, 3), score_range=(5.0, 8.5),
        prefer_weekend_submit=True),
    Archetype.DELAYED: ArchetypeConfig(
        kind=Archetype.DELAYED,
        weekday_active=0.25, weekend_active=0.25,
        weekday_periods=(0.30, 0.40, 0.30), weekend_periods=(0.30, 0.40, 0.30),
        events_per_day=(1, 2), gap_median_hours=1.0, gap_sigma=0.9,
        submit_prob=0.20, first_day=(2, 5), submit_day=(8, 12),
        abandon_after=(1, 2), score_range=(4.0, 7.5)),
    Archetype.IRREGULAR: ArchetypeConfig(
        kind=Archetype.IRREGULAR,
        weekday_active=0.65, weekend_active=0.65,
        weekday_periods=(0.34, 0.33, 0.33), weekend_periods=(0.34, 0.33, 0.33),
        events_per_day=(1, 3), gap_median_hours=1.2, gap_sigma=1.8,
        submit_prob=0.80, first_day=(0, 1), submit_day=(5, 9),
        abandon_after=(2, 4), score_range=(5.5, 9.0)),
    Archetype.ERRATIC_DELAYED: ArchetypeConfig(
        kind=Archetype.ERRATIC_DELAYED,
        weekday_active=0.05, weekend_active=0.45,
        weekday_periods=(0.10, 0.20, 0.70), weekend_periods=(0.05, 0.15, 0.80),
        events_per_day=(1, 2), gap_median_hours=0.8, gap_sigma=1.2,
        submit_prob=0.08, first_day=(1, 4), submit_day=(9, 13),
        abandon_after=(1, 2), score_range=(3.0, 6.5),
        prefer_weekend_submit=True),
}

DEFAULT_MIX = {
    Archetype.ENGAGED_REGULAR.value: 0.55,
    Archetype.ERRATIC.value: 0.15,
    Archetype.DELAYED.value: 0.15,
    Archetype.IRREGULAR.value: 0.10,
    Archetype.ERRATIC_DELAYED.value: 0.05,
}


@dataclass(frozen=True)
class CohortSpec:
    student_count: int
    mix: Mapping
    seed: int
    quizzes_per_semester: int = 4
    semester_tags: tuple[str, ...] = ("S1", "S2", "S3", "S4")
    horizon_days: int = 16
    semester_gap_days: int = 91
    quiz_spacing_days: int = 21

    def __post_init__(self):
        if self.student_count <= 0:
            raise ValueError("student_count must be positive")
        if self.seed is None:
            raise ValueError("seed is mandatory")
        if len(self.semester_tags) != 4:
            raise ValueError("exactly four semester tags required")


@dataclass
class SynthCohort:
    attempts: list[QuizAttempt]
    events: list[LogEvent]
    truth: list[dict]
    grades: dict[str, float]
    calendar: SemesterCalendar
    student_archetypes: dict[str, Archetype]
    student_semesters: dict[str, str]


def normalize_mix(mix: Mapping) -> dict[Archetype, float]:
    out: dict[Archetype, float] = {}
    for key, value in mix.items():
        kind = key if isinstance(key, Archetype) else Archetype(str(key))
        if kind in out:
            raise InvalidProportions(f"duplicate archetype {kind.value}")
        out[kind] = float(value)
    if any(v < 0 for v in out.values()):
        raise InvalidProportions("proportions must be non-negative")
    total = sum(out.values())
    if abs(total - 1.0) > 1e-9:
        raise InvalidProportions(f"proportions sum to {total}, expected 1")
    return out


def allocate_archetypes(mix: Mapping, count: int) -> dict[Archetype, int]:
    """Largest-remainder allocation; exact when count * p is integral."""
    shares = normalize_mix(mix)
    kinds = [k for k in Archetype if k in shares]
    floors = {k: int(math.floor(shares[k] * count)) for k in kinds}
    leftover = count - sum(floors.values())
    by_remainder = sorted(kinds, key=lambda k: (-(shares[k] * count - floors[k]),
                                                list(Archetype).index(k)))
    for k in by_remainder[:leftover]:
        floors[k] += 1
    return floors


def _is_weekend(abs_day: int) -> bool:
    return abs_day % 7 >= 5  # epoch base is a Monday


def _pick_period(rng: np.random.Generator, weights: tuple[float, ...]) -> int:
    w = np.asarray(weights, dtype=float)
    return int(rng.choice(3, p=w / w.sum()))


def _stamp_hours(abs_day: int, hours: list[float], cap_hour: float) -> list[int]:
    """Convert in-day hour marks to timestamps, clamped to the period and
    kept strictly increasing by at least 2 s."""
    out: list[int] = []
    prev = -10
    for hour in hours:
        sec = int(min(hour, cap_hour) * 3600)
        sec = max(sec, prev + 2)
        out.append(abs_day * DAY + sec)
        prev = sec
    return out


def _day_events(rng: np.random.Generator, abs_day: int, n_events: int,
                period: int, gap_lo: float, gap_hi: float) -> list[int]:
    """Event timestamps within one calendar day, gaps drawn from [gap_lo, gap_hi]."""
    lo, hi = _PERIOD_HOURS[period]
    hour = lo + float(rng.uniform(0.0, 1.0))
    hours = [hour]
    for _ in range(n_events - 1):
        hour += float(rng.uniform(gap_lo, gap_hi))
        hours.append(hour)
    return _stamp_hours(abs_day, hours, hi)


def _regular_day_events(rng: np.random.Generator, abs_day: int, n_events: int,
                        period: int, cfg: ArchetypeConfig) -> list[int]:
    lo, hi = _PERIOD_HOURS[period]
    hour = lo + float(rng.uniform(0.0, 1.5))
    hours = [hour]
    for _ in range(n_events - 1):
        gap = float(rng.lognormal(math.log(cfg.gap_median_hours), cfg.gap_sigma))
        hour += max(gap, _REGULAR_GAP_MIN)
        hours.append(hour)
    return _stamp_hours(abs_day, hours, hi)


def _pick_submit_day(rng: np.random.Generator, cfg: ArchetypeConfig,
                     start_day: int, horizon: int) -> int:
    lo, hi = cfg.submit_day[0], min(cfg.submit_day[1], horizon)
    if lo > hi:
        lo = hi
    if cfg.prefer_weekend_submit:
        weekend_days = [d for d in range(lo, hi + 1) if _is_weekend(start_day + d)]
        if weekend_days:
            return int(rng.choice(weekend_days))
    return int(rng.integers(lo, hi + 1))


def _attempt_events(rng: np.random.Generator, cfg: ArchetypeConfig,
                    start_day: int, horizon: int) -> tuple[list[tuple[str, int]], bool, int]:
    """All (event name, ts) for one attempt plus (submitted, last relative day)."""
    submits = bool(rng.random() < cfg.submit_prob)
    first = int(rng.integers(cfg.first_day[0], cfg.first_day[1] + 1))
    if submits:
        d_star = _pick_submit_day(rng, cfg, start_day, horizon)
        first = min(first, d_star)
        last_active = d_star - 1
    else:
        d_star = -1
        span = int(rng.integers(cfg.abandon_after[0], cfg.abandon_after[1] + 1))
        last_active = min(first + span, horizon)

    active_days = []
    for d in range(first, last_active + 1):
        weekend = _is_weekend(start_day + d)
        p_active = cfg.weekend_active if weekend else cfg.weekday_active
        if rng.random() < p_active:
            active_days.append(d)
    if submits:
        # final push: the two days before submission are worked regardless
        forced = {d for d in (d_star - 2, d_star - 1) if first <= d <= last_active}
        active_days = sorted(set(active_days) | forced)
    if not active_days and not submits and first <= last_active:
        # an abandoned attempt still needs one event; pick the likeliest day
        candidates = range(first, last_active + 1)
        active_days = [max(candidates,
                           key=lambda d: (cfg.weekend_active
                                          if _is_weekend(start_day + d)
                                          else cfg.weekday_active, -d))]

    events: list[tuple[str, int]] = []
    for d in active_days:
        abs_day = start_day + d
        weekend = _is_weekend(abs_day)
        weights = cfg.weekend_periods if weekend else cfg.weekday_periods
        period = _pick_period(rng, weights)
        n_ev = int(rng.integers(cfg.events_per_day[0], cfg.events_per_day[1] + 1))
        if rng.random() < _MINI_BURST_PROB:
            stamps = _day_events(rng, abs_day, n_ev + 2, period, *_MINI_BURST_RANGE)
        else:
            stamps = _regular_day_events(rng, abs_day, n_ev, period, cfg)
        for ts in stamps:
            name = "answered" if rng.random() < 0.5 else "viewed"
            events.append((name, ts))

    if submits:
        abs_day = start_day + d_star
        weekend = _is_weekend(abs_day)
        weights = cfg.weekend_periods if weekend else cfg.weekday_periods
        period = _pick_period(rng, weights)
        if rng.random() < _WEAK_BURST_PROB:
            k = int(rng.integers(3, 5))
            stamps = _day_events(rng, abs_day, k, period, *_WEAK_BURST_RANGE)
        else:
            k = int(rng.integers(6, 11))
            stamps = _day_events(rng, abs_day, k, period, *_BURST_RANGE)
        for ts in stamps:
            events.append(("answered", ts))
        submit_ts = stamps[-1] + int(rng.integers(120, 600))
        events.append(("submitted", submit_ts))
        return events, True, d_star
    return events, False, horizon


def generate_cohort(spec: CohortSpec,
                    archetypes: Mapping[Archetype, ArchetypeConfig] | None = None
                    ) -> SynthCohort:
    configs = dict(DEFAULT_ARCHETYPES)
    if archetypes:
        configs.update(archetypes)
    counts = allocate_archetypes(spec.mix, spec.student_count)
    kinds: list[Archetype] = []
    for kind in Archetype:
        kinds.extend([kind] * counts.get(kind, 0))

    seeds = np.random.SeedSequence(spec.seed).spawn(spec.student_count)
    attempts: list[QuizAttempt] = []
    events: list[LogEvent] = []
    truth: list[dict] = []
    grades: dict[str, float] = {}
    student_archetypes: dict[str, Archetype] = {}
    student_semesters: dict[str, str] = {}

    for u, (kind, seed) in enumerate(zip(kinds, seeds)):
        rng = np.random.default_rng(seed)
        cfg = configs[kind]
        student_id = f"s{u + 1:04d}"
        sem = u % 4
        sem_tag = spec.semester_tags[sem]
        sem_day = sem * spec.semester_gap_days
        course_id = f"C-{sem_tag}"
        student_archetypes[student_id] = kind
        student_semesters[student_id] = sem_tag

        submitted_count = 0
        for q in range(spec.quizzes_per_semester):
            quiz_id = f"Q-{sem_tag}-{q + 1:02d}"
            attempt_id = f"a-{student_id}-{sem_tag}{q + 1:02d}"
            start_day = sem_day + q * spec.quiz_spacing_days + int(rng.integers(0, 5))
            start_ts = EPOCH_BASE + start_day * DAY + 6 * 3600
            ev, submitted, last_day = _attempt_events(rng, cfg, start_day,
                                                      spec.horizon_days)
            end_ts = None
            points = None
            if submitted:
                submitted_count += 1
                end_ts = EPOCH_BASE + ev[-1][1]
                points = round(float(rng.uniform(*cfg.score_range)), 1)
            attempts.append(QuizAttempt(
                quiz_id=quiz_id, course_id=course_id, attempt_id=attempt_id,
                attempt_no=1, start_time=start_ts, end_time=end_ts,
                quiz_status=QuizStatus.SUBMITTED if submitted else QuizStatus.IN_PROGRESS,
                max_points=10.0, points=points))
            origin_draw = rng.random(len(ev))
            for (name, ts), o in zip(ev, origin_draw):
                ts_abs = EPOCH_BASE + ts
                events.append(LogEvent(
                    student_id=student_id, course_id=course_id,
                    object_id=attempt_id, component="quiz", event=name,
                    timestamp=ts_abs, origin="mobile" if o < 0.2 else "web"))
            for d in range(last_day + 1):
                truth.append({
                    "attemptID": attempt_id,
                    "studentID": student_id,
                    "archetype": kind.value,
                    "dateRel": d,
                    "engaged": bool(submitted and d == last_day),
                })
        rate = submitted_count / spec.quizzes_per_semester
        grade = 1.0 + 5.0 * rate + float(rng.normal(0.0, 0.35))
        grades[student_id] = round(min(6.0, max(1.0, grade)), 1)

    attempts.sort(key=lambda a: (a.start_time, a.attempt_id))
    events.sort(key=lambda e: (e.timestamp, e.student_id, e.object_id, e.event))
    truth.sort(key=lambda r: (r["attemptID"], r["dateRel"]))

    windows = tuple(
        (spec.semester_tags[s],
         EPOCH_BASE + s * spec.semester_gap_days * DAY,
         EPOCH_BASE + (s + 1) * spec.semester_gap_days * DAY)
        for s in range(4))
    calendar = SemesterCalendar(windows=windows)

    return SynthCohort(attempts=attempts, events=events, truth=truth,
                       grades=grades, calendar=calendar,
                       student_archetypes=student_archetypes,
                       student_semesters=student_semesters)


def grades_to_csv(grades: Mapping[str, float]) -> bytes:
    lines = ["studentID,grade"]
    for sid in sorted(grades):
        lines.append(f"{sid},{grades[sid]}")
    return ("\r\n".join(lines) + "\r\n").encode()


def grades_from_csv(data: bytes | str) -> dict[str, float]:
    text = data.decode() if isinstance(data, bytes) else data
    lines = [line for line in text.splitlines() if line.strip()]
    header = lines[0].split(",")
    if [h.strip() for h in header] != ["studentID", "grade"]:
        raise ValueError(f"unexpected grades header {header}")
    return {sid: float(g) for sid, g in (line.split(",") for line in lines[1:])}


def truth_to_jsonl(truth: list[dict]) -> bytes:
    lines = [json.dumps(row, sort_keys=True) for row in truth]
    return ("\n".join(lines) + "\n").encode() if lines else b""


def truth_from_jsonl(data: bytes | str) -> list[dict]:
    text = data.decode() if isinstance(data, bytes) else data
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def write_cohort(cohort: SynthCohort, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "quiz": out / "quiz.csv",
        "logs": out / "logs.csv",
        "truth": out / "truth.jsonl",
        "grades": out / "grades.csv",
        "calendar": out / "calendar.json",
    }
    paths["quiz"].write_bytes(write_quiz_table(cohort.attempts))
    paths["logs"].write_bytes(write_log_table(cohort.events))
    paths["truth"].write_bytes(truth_to_jsonl(cohort.truth))
    paths["grades"].write_bytes(grades_to_csv(cohort.grades))
    paths["calendar"].write_bytes(cohort.calendar.to_json())
    return paths
