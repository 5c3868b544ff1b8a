import numpy as np
import pytest

from quizsense.features import FEATURE_NAMES, build_labeled_samples, samples_to_matrix
from quizsense.ingest import join_attempt_events, parse_log_table, parse_quiz_table
from quizsense.preprocess import build_daily_records
from quizsense.synth import (
    Archetype,
    CohortSpec,
    InvalidProportions,
    SynthCohort,
    allocate_archetypes,
    generate_cohort,
    grades_from_csv,
    grades_to_csv,
    truth_from_jsonl,
    truth_to_jsonl,
    write_cohort,
)

DEFAULT_MIX = {
    "EngagedRegular": 0.55, "Erratic": 0.15, "Delayed": 0.15,
    "Irregular": 0.10, "ErraticDelayed": 0.05,
}


def small_cohort(seed=7, n=40, mix=None) -> tuple[CohortSpec, SynthCohort]:
    spec = CohortSpec(student_count=n, mix=mix or DEFAULT_MIX, seed=seed,
                      quizzes_per_semester=2)
    return spec, generate_cohort(spec)


def cohort_samples(cohort: SynthCohort, horizon: int):
    """Run the real ingest/preprocess/featurize path over a generated cohort."""
    streams, report = join_attempt_events(cohort.attempts, cohort.events)
    assert report.dangling_events == 0
    assert report.course_mismatches == 0
    by_id = {a.attempt_id: a for a in cohort.attempts}
    by_student: dict[str, list] = {}
    for stream in streams:
        by_student.setdefault(stream.student_id, []).append(by_id[stream.attempt_id])
    for attempts in by_student.values():
        attempts.sort(key=lambda a: a.start_time)
    samples = []
    for stream in streams:
        attempt = by_id[stream.attempt_id]
        history = [a for a in by_student[stream.student_id]
                   if a.start_time < attempt.start_time]
        records = build_daily_records(stream, cutoff=horizon)
        samples.extend(build_labeled_samples(attempt, records, history,
                                             student_id=stream.student_id))
    return samples


class TestAllocation:
    def test_exact_when_integral(self):
        mix = {"EngagedRegular": 0.5, "Erratic": 0.2, "Delayed": 0.2,
               "Irregular": 0.1, "ErraticDelayed": 0.0}
        counts = allocate_archetypes(mix, 100)
        assert counts == {Archetype.ENGAGED_REGULAR: 50, Archetype.ERRATIC: 20,
                          Archetype.DELAYED: 20, Archetype.IRREGULAR: 10,
                          Archetype.ERRATIC_DELAYED: 0}

    def test_total_preserved_with_remainders(self):
        counts = allocate_archetypes({"EngagedRegular": 1 / 3, "Erratic": 1 / 3,
                                      "Delayed": 1 / 3}, 10)
        assert sum(counts.values()) == 10
        assert all(c in (3, 4) for c in counts.values())

    def test_bad_sum_rejected(self):
        with pytest.raises(InvalidProportions):
            allocate_archetypes({"EngagedRegular": 0.7, "Erratic": 0.2}, 10)

    def test_negative_rejected(self):
        with pytest.raises(InvalidProportions):
            allocate_archetypes({"EngagedRegular": 1.2, "Erratic": -0.2}, 10)

    def test_unknown_archetype_rejected(self):
        with pytest.raises(ValueError):
            allocate_archetypes({"Keen": 1.0}, 10)


class TestDeterminism:
    def test_byte_identical_outputs(self, tmp_path):
        spec, first = small_cohort(seed=123)
        second = generate_cohort(spec)
        d1, d2 = tmp_path / "run1", tmp_path / "run2"
        paths1 = write_cohort(first, d1)
        paths2 = write_cohort(second, d2)
        for key in paths1:
            assert paths1[key].read_bytes() == paths2[key].read_bytes()

    def test_seed_changes_output(self):
        _, a = small_cohort(seed=1)
        _, b = small_cohort(seed=2)
        assert truth_to_jsonl(a.truth) != truth_to_jsonl(b.truth)


class TestFilesParse:
    def test_round_trip_through_ingest(self, tmp_path):
        _, cohort = small_cohort()
        paths = write_cohort(cohort, tmp_path)
        quiz = parse_quiz_table(paths["quiz"].read_bytes(), format="csv")
        logs = parse_log_table(paths["logs"].read_bytes(), format="csv")
        assert quiz.issues == []
        assert logs.issues == []
        assert quiz.records == cohort.attempts
        assert logs.records == cohort.events

    def test_join_is_clean(self):
        _, cohort = small_cohort()
        streams, report = join_attempt_events(cohort.attempts, cohort.events)
        assert report.dangling_events == 0
        assert report.course_mismatches == 0
        assert report.early_events == 0
        assert len(streams) == len(cohort.attempts)

    def test_grades_and_truth_serialize(self, tmp_path):
        _, cohort = small_cohort()
        assert grades_from_csv(grades_to_csv(cohort.grades)) == cohort.grades
        assert truth_from_jsonl(truth_to_jsonl(cohort.truth)) == cohort.truth


class TestTruthAlignment:
    def test_truth_matches_preprocess(self):
        spec, cohort = small_cohort(seed=99, n=32)
        streams, _ = join_attempt_events(cohort.attempts, cohort.events)
        truth_by_attempt: dict[str, list[dict]] = {}
        for row in cohort.truth:
            truth_by_attempt.setdefault(row["attemptID"], []).append(row)
        for stream in streams:
            records = build_daily_records(stream, cutoff=spec.horizon_days)
            rows = truth_by_attempt[stream.attempt_id]
            assert len(records) == len(rows)
            for rec, row in zip(records, rows):
                assert rec.date_rel == row["dateRel"]
                assert rec.did_submit == row["engaged"]

    def test_semester_assignment_matches_calendar(self):
        _, cohort = small_cohort()
        by_id = {a.attempt_id: a for a in cohort.attempts}
        for row in cohort.truth:
            attempt = by_id[row["attemptID"]]
            tag = cohort.calendar.tag_for(attempt.start_time)
            assert tag == cohort.student_semesters[row["studentID"]]


class TestPlantedContrasts:
    def test_delayed_mostly_above_engaged_median_inactivity(self):
        spec_e = CohortSpec(student_count=30, mix={"EngagedRegular": 1.0}, seed=5,
                            quizzes_per_semester=2)
        spec_d = CohortSpec(student_count=30, mix={"Delayed": 1.0}, seed=5,
                            quizzes_per_semester=2)
        def inactive_values(spec):
            cohort = generate_cohort(spec)
            streams, _ = join_attempt_events(cohort.attempts, cohort.events)
            out = []
            for stream in streams:
                out.extend(r.inactive_days
                           for r in build_daily_records(stream, cutoff=spec.horizon_days))
            return np.array(out)
        reference = np.median(inactive_values(spec_e))
        delayed = inactive_values(spec_d)
        assert (delayed > reference).mean() >= 0.90

    def test_directional_contrasts(self):
        spec, cohort = small_cohort(seed=11, n=120)
        samples = cohort_samples(cohort, spec.horizon_days)
        X, y = samples_to_matrix(samples)
        submit = y == 1.0
        inactive_idx = FEATURE_NAMES.index("days_inactive")
        mean_inactive_submit = X[submit, inactive_idx].mean()
        mean_inactive_other = X[~submit, inactive_idx].mean()
        assert mean_inactive_other > 3.0 * mean_inactive_submit
        for idx in range(6):
            assert X[submit, idx].mean() > X[~submit, idx].mean(), FEATURE_NAMES[idx]

    def test_erratic_concentrates_on_weekends(self):
        spec = CohortSpec(student_count=24, mix={"Erratic": 1.0}, seed=3,
                          quizzes_per_semester=2)
        cohort = generate_cohort(spec)
        stamps = np.array([e.timestamp for e in cohort.events])
        days = (stamps - 1_546_819_200) // 86_400
        weekend = (days % 7) >= 5
        assert weekend.mean() >= 0.6

    def test_grades_track_submission_rate(self):
        spec, cohort = small_cohort(seed=21, n=120)
        by_student: dict[str, list] = {}
        for a in cohort.attempts:
            sid = a.attempt_id.split("-")[1]
            by_student.setdefault(sid, []).append(a)
        rates, grades = [], []
        for sid, attempts in by_student.items():
            rates.append(sum(a.submitted for a in attempts) / len(attempts))
            grades.append(cohort.grades[sid])
        r = np.corrcoef(rates, grades)[0, 1]
        assert r > 0.6

    def test_engagement_label_base_rate_sane(self):
        spec, cohort = small_cohort(seed=13, n=80)
        engaged = sum(r["engaged"] for r in cohort.truth)
        assert 0.03 < engaged / len(cohort.truth) < 0.25
