"""Batch orchestration: staged runs persisted as content-addressed snapshots.

A snapshot directory is named by a digest of the input files plus the run
config, so re-running with identical bytes reuses the stored artifacts
instead of recomputing.  Artifacts are deterministic byte-for-byte given
(seed, config, inputs); instructor decisions land in a separate append-only
log that is not part of the snapshot digest set.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .config import RunConfig, config_digest
from .eval import (classification_metrics, cohort_reports, metrics_to_json,
                   roc_auc)
from .explain import (kernel_shap, stratified_background,
                      write_explanations_jsonl)
from .features import (LabeledSample, build_labeled_samples,
                       samples_to_matrix, write_features_jsonl)
from .ingest import join_attempt_events, parse_log_table, parse_quiz_table
from .intervene import (DEFAULT_CATALOG, PlanStore, catalog_from_json,
                        catalog_to_json, read_decisions_jsonl,
                        recommend_interventions, write_decisions_jsonl)
from .models import (ModelKind, ModelSpec, grid_search_cv, load_model_file,
                     save_model_file, split_by_semester, train_model)
from .preprocess import build_daily_records, write_daily_jsonl
from .risk import (assess, cohort_risk_summary, read_risk_jsonl,
                   risk_summary_to_json, write_risk_jsonl)
from .semesters import SemesterCalendar

STAGES = ("ingest", "preprocess", "features", "train", "explain", "risk",
          "intervene", "report")

SNAPSHOT_FILE = "snapshot.json"
DECISIONS_FILE = "decisions.jsonl"  # mutable side log, never digested


class StageError(RuntimeError):
    """Fatal failure inside one pipeline stage; partial artifacts remain."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class UnknownSnapshot(KeyError):
    def __init__(self, snapshot_id: str):
        super().__init__(snapshot_id)
        self.snapshot_id = snapshot_id


class SnapshotIntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineSnapshot:
    snapshot_id: str
    input_digests: dict[str, str]
    config_digest: str
    model_ref: str
    artifacts: dict[str, str]  # artifact name -> file name inside the snapshot dir
    artifact_digests: dict[str, str]
    created_at: str
    summary: dict
    root: Path | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "snapshotID": self.snapshot_id,
            "inputDigests": dict(self.input_digests),
            "configDigest": self.config_digest,
            "modelRef": self.model_ref,
            "artifacts": dict(self.artifacts),
            "artifactDigests": dict(self.artifact_digests),
            "createdAt": self.created_at,
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, obj: dict, root: Path | None = None) -> "PipelineSnapshot":
        return cls(
            snapshot_id=obj["snapshotID"],
            input_digests=obj["inputDigests"],
            config_digest=obj["configDigest"],
            model_ref=obj["modelRef"],
            artifacts=obj["artifacts"],
            artifact_digests=obj["artifactDigests"],
            created_at=obj["createdAt"],
            summary=obj["summary"],
            root=root,
        )


@dataclass(frozen=True)
class QueueEntry:
    plan_id: str
    student_id: str | None
    attempt_id: str | None
    date_rel: int | None
    risk_level: str
    shap_sums: dict[str, float]
    status: str

    def to_dict(self) -> dict:
        return {
            "planID": self.plan_id,
            "studentID": self.student_id,
            "attemptID": self.attempt_id,
            "dateRel": self.date_rel,
            "riskLevel": self.risk_level,
            "shapSums": self.shap_sums,
            "status": self.status,
        }


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _digest_inputs(paths: dict[str, Path]) -> dict[str, str]:
    return {name: _sha256(p.read_bytes()) for name, p in sorted(paths.items())}


def snapshot_id_for(input_digests: dict[str, str], cfg_digest: str) -> str:
    lines = [f"{k}:{v}" for k, v in sorted(input_digests.items())]
    lines.append(f"config:{cfg_digest}")
    return _sha256("\n".join(lines).encode("utf-8"))[:16]


class SnapshotStore:
    """Directory of snapshot subdirectories plus their side logs."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, snapshot_id: str) -> Path:
        return self.root / snapshot_id

    def exists(self, snapshot_id: str) -> bool:
        return (self.path(snapshot_id) / SNAPSHOT_FILE).is_file()

    def list(self) -> list[str]:
        out = []
        for child in sorted(self.root.iterdir()):
            if (child / SNAPSHOT_FILE).is_file():
                out.append(child.name)
        return out

    def load(self, snapshot_id: str) -> PipelineSnapshot:
        index = self.path(snapshot_id) / SNAPSHOT_FILE
        if not index.is_file():
            raise UnknownSnapshot(snapshot_id)
        doc = json.loads(index.read_text("utf-8"))
        return PipelineSnapshot.from_dict(doc, root=self.path(snapshot_id))

    def read_artifact(self, snapshot_id: str, name: str) -> bytes:
        snap = self.load(snapshot_id)
        if name not in snap.artifacts:
            raise KeyError(name)
        return (self.path(snapshot_id) / snap.artifacts[name]).read_bytes()

    def verify(self, snapshot_id: str) -> None:
        """Re-hash every artifact against the recorded digests."""
        snap = self.load(snapshot_id)
        for name, fname in snap.artifacts.items():
            digest = _sha256((self.path(snapshot_id) / fname).read_bytes())
            if digest != snap.artifact_digests[name]:
                raise SnapshotIntegrityError(
                    f"{snapshot_id}/{fname}: digest drift on {name!r}")


def build_sample_set(attempts, streams, config: RunConfig):
    records_by_attempt = {}
    daily = []
    for stream in streams:
        recs = build_daily_records(stream, cutoff=config.cutoff_days, tz=config.tz)
        records_by_attempt[stream.attempt_id] = recs
        daily.extend(recs)

    by_student: dict[str, list] = {}
    student_of = {s.attempt_id: s.student_id for s in streams}
    for att in attempts:
        sid = student_of.get(att.attempt_id)
        if sid is not None:
            by_student.setdefault(sid, []).append(att)
    for atts in by_student.values():
        atts.sort(key=lambda a: (a.start_time, a.attempt_id))

    samples: list[LabeledSample] = []
    for att in sorted(attempts, key=lambda a: (a.start_time, a.attempt_id)):
        recs = records_by_attempt.get(att.attempt_id, [])
        if not recs:
            continue
        sid = student_of.get(att.attempt_id)
        history = [h for h in by_student.get(sid, [])
                   if h.start_time < att.start_time] if sid else []
        samples.extend(build_labeled_samples(att, recs, history,
                                             student_id=sid, tz=config.tz))
    return daily, samples


def resolve_model_kind(name: str) -> ModelKind:
    """Case-insensitive lookup over enum names and wire values."""
    folded = name.replace("-", "").replace("_", "").lower()
    for kind in ModelKind:
        if folded in (kind.name.replace("_", "").lower(), kind.value.lower()):
            return kind
    raise ValueError(f"unknown model kind {name!r}; "
                     f"expected one of {[k.value for k in ModelKind]}")


def _train_stage(samples, start_time_of, calendar, config: RunConfig,
                 model_path: Path | None):
    if model_path is not None:
        model = load_model_file(model_path)
        return model, None, {"loaded_from": str(model_path)}

    kind = resolve_model_kind(config.model_kind)
    split = None
    train_samples: Sequence[LabeledSample] = samples
    if config.test_tag and calendar is not None:
        train_tags = config.train_tags or tuple(
            t for t in calendar.tags if t != config.test_tag)
        split = split_by_semester(samples, start_time_of, calendar,
                                  train_tags=train_tags,
                                  test_tag=config.test_tag)
        train_samples = split.train

    grid_table = None
    if config.grid == "none":
        spec = ModelSpec(kind=kind, hyperparams={}, seed=config.seed)
    else:
        result = grid_search_cv(kind, None, train_samples,
                                folds=config.folds, seed=config.seed)
        spec = result.best_spec
        grid_table = result.table
    model = train_model(spec, train_samples)
    info = {"kind": kind.value, "hyperparams": spec.hyperparams}
    if grid_table is not None:
        info["grid"] = grid_table
    return model, split, info


def _metrics_stage(model, split, samples):
    if split is not None and split.test:
        eval_samples = list(split.test)
        in_sample = False
    else:
        eval_samples = list(samples)
        in_sample = True
    X, y = samples_to_matrix(eval_samples)
    labels = y.astype(int)
    if len(set(labels.tolist())) < 2:
        return None, None, in_sample
    probs = model.predict_proba(X)
    counts, report = classification_metrics(labels, (probs >= 0.5).astype(int))
    auc = roc_auc(labels, probs)
    return counts, (report, auc), in_sample


def run_pipeline(config: RunConfig,
                 quiz_path: str | Path,
                 logs_path: str | Path,
                 *,
                 calendar_path: str | Path | None = None,
                 grades_path: str | Path | None = None,
                 store: SnapshotStore | str | Path = "qs-data",
                 model_path: str | Path | None = None) -> PipelineSnapshot:
    """Run ingest → … → intervene and persist everything under one snapshot."""
    if not isinstance(store, SnapshotStore):
        store = SnapshotStore(store)
    inputs = {"quiz": Path(quiz_path), "logs": Path(logs_path)}
    if calendar_path is not None:
        inputs["calendar"] = Path(calendar_path)
    if grades_path is not None:
        inputs["grades"] = Path(grades_path)
    if model_path is not None:
        inputs["model"] = Path(model_path)

    try:
        missing = [name for name, p in inputs.items() if not p.is_file()]
        if missing:
            raise FileNotFoundError(
                f"missing input file(s): "
                + ", ".join(f"{n}={inputs[n]}" for n in missing))
        input_digests = _digest_inputs(inputs)
    except OSError as exc:
        raise StageError("ingest", exc) from exc

    cfg_digest = config_digest(config)
    snapshot_id = snapshot_id_for(input_digests, cfg_digest)
    if store.exists(snapshot_id):
        return store.load(snapshot_id)

    out = store.path(snapshot_id)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}

    def emit(name: str, fname: str, data: bytes) -> None:
        (out / fname).write_bytes(data)
        artifacts[name] = fname

    # ingest
    try:
        quiz_result = parse_quiz_table(inputs["quiz"].read_bytes(),
                                       format=_fmt(inputs["quiz"]))
        log_result = parse_log_table(inputs["logs"].read_bytes(),
                                     format=_fmt(inputs["logs"]))
        streams, join_report = join_attempt_events(quiz_result.records,
                                                   log_result.records)
        calendar = None
        if "calendar" in inputs:
            calendar = SemesterCalendar.from_json(inputs["calendar"].read_bytes())
        grades = None
        if "grades" in inputs:
            grades = _parse_grades(inputs["grades"].read_bytes())
    except StageError:
        raise
    except Exception as exc:
        raise StageError("ingest", exc) from exc

    # preprocess
    try:
        daily, samples = build_sample_set(quiz_result.records,
                                                    streams, config)
        emit("daily", "daily.jsonl", write_daily_jsonl(daily))
    except Exception as exc:
        raise StageError("preprocess", exc) from exc

    # features
    try:
        if not samples:
            raise ValueError("no labeled samples produced")
        emit("features", "features.jsonl", write_features_jsonl(samples))
    except Exception as exc:
        raise StageError("features", exc) from exc

    # train / load + metrics
    try:
        start_time_of = {a.attempt_id: a.start_time for a in quiz_result.records}
        model, split, train_info = _train_stage(
            samples, start_time_of, calendar, config,
            Path(model_path) if model_path else None)
        save_model_file(model, out / "model.qsm")
        artifacts["model"] = "model.qsm"
        counts, metrics, in_sample = _metrics_stage(model, split, samples)
        if metrics is not None:
            report, auc = metrics
            doc = json.loads(metrics_to_json(report, counts).decode("utf-8"))
            doc["AUC"] = auc
            doc["in_sample"] = in_sample
            doc["model_kind"] = config.model_kind
            emit("metrics", "metrics.json",
                 json.dumps(doc, sort_keys=True, separators=(",", ":")).encode())
    except StageError:
        raise
    except Exception as exc:
        raise StageError("train", exc) from exc

    # explain
    try:
        train_for_background = split.train if split is not None else samples
        background = stratified_background(train_for_background,
                                           size=config.background_size,
                                           seed=config.seed)
        X, _ = samples_to_matrix(samples)
        explanations = []
        for i, sample in enumerate(samples):
            e = kernel_shap(model, X[i], background,
                            coalition_budget=config.coalition_budget,
                            seed=config.seed)
            e.attempt_id = sample.attempt_id
            e.date_rel = sample.date_rel
            explanations.append(e)
        emit("explanations", "explanations.jsonl",
             write_explanations_jsonl(explanations))
    except Exception as exc:
        raise StageError("explain", exc) from exc

    # risk
    try:
        assessments = [assess(e) for e in explanations]
        emit("risk", "risk.jsonl", write_risk_jsonl(assessments))
        emit("risk_summary", "risk_summary.json",
             risk_summary_to_json(cohort_risk_summary(assessments)))
    except Exception as exc:
        raise StageError("risk", exc) from exc

    # intervene
    try:
        emit("catalog", "catalog.json", catalog_to_json(DEFAULT_CATALOG))
        student_of = {s.attempt_id: s.student_id for s in streams}
        plan_store = PlanStore(DEFAULT_CATALOG)
        for a in assessments:
            sid = student_of.get(a.attempt_id)
            plan = recommend_interventions(a, student_id=sid)
            plan_store.add_plan(plan)
        emit("plans", "plans.jsonl", write_decisions_jsonl(plan_store))
    except Exception as exc:
        raise StageError("intervene", exc) from exc

    # report (cohort series for dashboards)
    try:
        cohort = cohort_reports(streams, quiz_result.records,
                                grades=grades, calendar=calendar,
                                tz=config.tz)
        emit("report", "report.json", cohort.to_json())
    except Exception as exc:
        raise StageError("report", exc) from exc

    summary = {
        "samples": len(samples),
        "attempts": len(quiz_result.records),
        "students": len({s.student_id for s in samples if s.student_id}),
        "engaged_samples": sum(1 for s in samples if s.engaged),
        "train": train_info,
        "join": {
            "matched_events": join_report.matched_events,
            "dangling_events": join_report.dangling_events,
            "attempts_without_events": join_report.attempts_without_events,
        },
        "parse_issues": {"quiz": len(quiz_result.issues),
                         "logs": len(log_result.issues)},
        "risk_summary": cohort_risk_summary(assessments),
    }
    if metrics is not None:
        report, auc = metrics
        summary["metrics"] = {"BA": report.ba, "TPR": report.tpr,
                              "TNR": report.tnr, "AUC": auc,
                              "in_sample": in_sample}

    digests = {name: _sha256((out / fname).read_bytes())
               for name, fname in artifacts.items()}
    snap = PipelineSnapshot(
        snapshot_id=snapshot_id,
        input_digests=input_digests,
        config_digest=cfg_digest,
        model_ref="model.qsm",
        artifacts=artifacts,
        artifact_digests=digests,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        summary=summary,
        root=out,
    )
    (out / SNAPSHOT_FILE).write_text(
        json.dumps(snap.to_dict(), sort_keys=True, indent=2) + "\n", "utf-8")
    return snap


def _fmt(path: Path) -> str:
    return "jsonl" if path.suffix.lower() in {".jsonl", ".ndjson"} else "csv"


def _parse_grades(data: bytes) -> dict[str, float]:
    from .synth import grades_from_csv
    return grades_from_csv(data)


_SEVERITY = {"High": 0, "Medium": 1, "Low": 2, "Engaged": 3}


def load_plan_store(store: SnapshotStore, snapshot_id: str) -> PlanStore:
    """Replay plan creation plus any instructor decisions recorded since."""
    store.load(snapshot_id)
    catalog = catalog_from_json(store.read_artifact(snapshot_id, "catalog"))
    data = store.read_artifact(snapshot_id, "plans")
    side = store.path(snapshot_id) / DECISIONS_FILE
    if side.is_file():
        data += side.read_bytes()
    return read_decisions_jsonl(data, catalog)


def append_decision_event(store: SnapshotStore, snapshot_id: str,
                          event: dict) -> None:
    if not store.exists(snapshot_id):
        raise UnknownSnapshot(snapshot_id)
    side = store.path(snapshot_id) / DECISIONS_FILE
    with side.open("ab") as fh:
        fh.write(json.dumps(event, sort_keys=True,
                            separators=(",", ":")).encode("utf-8") + b"\n")


def intervention_queue(store: SnapshotStore, snapshot_id: str,
                       levels: Sequence[str] | None = None) -> list[QueueEntry]:
    """Triage queue: High before Medium before Low, then most-negative
    total SHAP sum, then studentID; one active entry per sample."""
    if levels is None:
        levels = ("High", "Medium", "Low")
    wanted = set(levels)
    plan_store = load_plan_store(store, snapshot_id)
    risk_rows = {(a.attempt_id, a.date_rel): a
                 for a in read_risk_jsonl(store.read_artifact(snapshot_id, "risk"))}

    entries: dict[tuple, QueueEntry] = {}
    for plan_id, record in plan_store.records().items():
        plan = record.plan
        if plan.risk_level not in wanted:
            continue
        a = risk_rows.get((plan.attempt_id, plan.date_rel))
        sums = {
            "period_counts": a.flags.count_shap_sum if a else 0.0,
            "days_inactive": a.flags.inactive_shap if a else 0.0,
            "gap_stats": a.flags.stat_shap_sum if a else 0.0,
        }
        key = (plan.student_id, plan.attempt_id, plan.date_rel)
        entries[key] = QueueEntry(
            plan_id=plan_id,
            student_id=plan.student_id,
            attempt_id=plan.attempt_id,
            date_rel=plan.date_rel,
            risk_level=getattr(plan.risk_level, "value", plan.risk_level),
            shap_sums=sums,
            status=record.status.value,
        )

    def sort_key(e: QueueEntry):
        total = sum(e.shap_sums.values())
        return (_SEVERITY.get(e.risk_level, 9), total,
                e.student_id or "", e.plan_id)

    return sorted(entries.values(), key=sort_key)
