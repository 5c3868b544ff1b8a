"""JSON HTTP API over the snapshot store, versioned under /v1.

Handlers are stateless readers of persisted snapshots; pipeline runs execute
in a background thread behind a polling job endpoint, and decision writes
serialize on a per-process lock.
"""
from __future__ import annotations

import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .config import RunConfig, load_config
from .explain import partial_dependence_thresholds, read_explanations_jsonl
from .features import FEATURE_NAMES, read_features_jsonl, sample_to_dict
from .intervene import (DecisionAction, InstructorDecision, InvalidTransition,
                        UnknownPlan, UnknownStrategy, plan_to_dict,
                        record_to_dict)
from .models import load_model_file
from .pipeline import (DECISIONS_FILE, SnapshotStore, StageError,
                       UnknownSnapshot, intervention_queue, load_plan_store,
                       run_pipeline)
from .risk import read_risk_jsonl
from .synth import DEFAULT_MIX, CohortSpec, generate_cohort, write_cohort

import json


class RunRequest(BaseModel):
    quiz: str
    logs: str
    calendar: str | None = None
    grades: str | None = None
    config: str | None = None


class DecisionRequest(BaseModel):
    action: str
    actor: str
    strategies: list[str] = Field(default_factory=list)
    supersede: bool = False
    snapshot: str


class SynthRequest(BaseModel):
    students: int = Field(gt=0, le=10_000)
    seed: int = 0
    mix: dict[str, float] | None = None
    out_dir: str | None = None


def create_app(store: SnapshotStore | str | Path,
               token: str = "",
               static_dir: str | Path | None = None) -> FastAPI:
    if not isinstance(store, SnapshotStore):
        store = SnapshotStore(store)
    app = FastAPI(title="quizsense", version="1")
    app.state.store = store
    app.state.jobs = {}
    app.state.jobs_lock = threading.Lock()
    app.state.decisions_lock = threading.Lock()
    app.state.token = token

    def auth(request: Request) -> None:
        if not app.state.token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {app.state.token}":
            raise HTTPException(status_code=401, detail="invalid or missing token")

    dep = Depends(auth)

    def get_snapshot(snapshot_id: str):
        try:
            return store.load(snapshot_id)
        except UnknownSnapshot:
            raise HTTPException(status_code=404,
                                detail=f"unknown snapshot {snapshot_id!r}")

    def read_json_artifact(snapshot_id: str, name: str):
        try:
            return json.loads(store.read_artifact(snapshot_id, name))
        except KeyError:
            return None

    @app.post("/v1/pipeline/run", status_code=202, dependencies=[dep])
    def pipeline_run(req: RunRequest):
        try:
            config = load_config(req.config) if req.config else RunConfig()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        job_id = uuid.uuid4().hex[:12]
        job = {"jobID": job_id, "status": "running", "snapshotID": None,
               "error": None, "stage": None,
               "startedAt": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        with app.state.jobs_lock:
            app.state.jobs[job_id] = job

        def work():
            try:
                snap = run_pipeline(config, req.quiz, req.logs,
                                    calendar_path=req.calendar,
                                    grades_path=req.grades, store=store)
                job["status"] = "done"
                job["snapshotID"] = snap.snapshot_id
            except StageError as exc:
                job["status"] = "failed"
                job["stage"] = exc.stage
                job["error"] = str(exc)
            except Exception as exc:  # surfaced via polling, not a crashed thread
                job["status"] = "failed"
                job["error"] = str(exc)

        threading.Thread(target=work, daemon=True).start()
        return {"jobID": job_id, "status": "running"}

    @app.get("/v1/pipeline/{job_id}/status", dependencies=[dep])
    def pipeline_status(job_id: str):
        with app.state.jobs_lock:
            job = app.state.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        return job

    @app.get("/v1/cohort/{snapshot_id}/summary", dependencies=[dep])
    def cohort_summary(snapshot_id: str):
        snap = get_snapshot(snapshot_id)
        report = read_json_artifact(snapshot_id, "report") or {}
        return {
            "snapshotID": snap.snapshot_id,
            "createdAt": snap.created_at,
            "risk_summary": read_json_artifact(snapshot_id, "risk_summary"),
            "metrics": read_json_artifact(snapshot_id, "metrics"),
            "weekly_activity": report.get("weekly_activity", {}),
            "grade_bins": report.get("grade_bins", []),
            "summary": snap.summary,
        }

    @app.get("/v1/students/{student_id}/risk", dependencies=[dep])
    def student_risk(student_id: str, snapshot: str = Query(...)):
        get_snapshot(snapshot)
        samples = read_features_jsonl(store.read_artifact(snapshot, "features"))
        attempt_ids = {s.attempt_id for s in samples if s.student_id == student_id}
        if not attempt_ids:
            raise HTTPException(status_code=404,
                                detail=f"no samples for student {student_id!r}")
        assessments = read_risk_jsonl(store.read_artifact(snapshot, "risk"))
        rows = [{"attemptID": a.attempt_id, "dateRel": a.date_rel,
                 "level": a.level.value, "model_prediction": a.model_prediction,
                 "flags": {"erratic": a.flags.erratic, "delayed": a.flags.delayed,
                           "irregular": a.flags.irregular}}
                for a in assessments if a.attempt_id in attempt_ids]
        plan_store = load_plan_store(store, snapshot)
        plans = [record_to_dict(rec) for rec in plan_store.records().values()
                 if rec.plan.student_id == student_id]
        return {"studentID": student_id, "snapshotID": snapshot,
                "assessments": rows, "plans": plans}

    @app.get("/v1/attempts/{attempt_id}/explanation", dependencies=[dep])
    def attempt_explanation(attempt_id: str, snapshot: str = Query(...),
                            date_rel: int | None = Query(default=None)):
        get_snapshot(snapshot)
        explanations = read_explanations_jsonl(
            store.read_artifact(snapshot, "explanations"))
        rows = [e for e in explanations if e.attempt_id == attempt_id
                and (date_rel is None or e.date_rel == date_rel)]
        if not rows:
            raise HTTPException(status_code=404,
                                detail=f"no explanation for {attempt_id!r}")
        samples = {(s.attempt_id, s.date_rel): s for s in read_features_jsonl(
            store.read_artifact(snapshot, "features"))}
        out = []
        for e in rows:
            sample = samples.get((e.attempt_id, e.date_rel))
            out.append({
                "attemptID": e.attempt_id,
                "dateRel": e.date_rel,
                "base_value": e.base_value,
                "model_output": e.model_output,
                "features": FEATURE_NAMES,
                "attributions": [float(p) for p in e.attributions],
                "feature_values": ([sample_to_dict(sample)[n] for n in FEATURE_NAMES]
                                   if sample else None),
                "label": sample.label.value if sample else None,
            })
        return {"attemptID": attempt_id, "snapshotID": snapshot,
                "explanations": out}

    @app.get("/v1/attempts/{attempt_id}/dependence/{feature}", dependencies=[dep])
    def attempt_dependence(attempt_id: str, feature: str,
                           snapshot: str = Query(...),
                           grid_size: int = Query(default=20, ge=2, le=200)):
        snap = get_snapshot(snapshot)
        if feature not in FEATURE_NAMES:
            raise HTTPException(status_code=404,
                                detail=f"unknown feature {feature!r}")
        samples = read_features_jsonl(store.read_artifact(snapshot, "features"))
        if not any(s.attempt_id == attempt_id for s in samples):
            raise HTTPException(status_code=404,
                                detail=f"unknown attempt {attempt_id!r}")
        model = load_model_file(store.path(snapshot) / snap.model_ref)
        curve = partial_dependence_thresholds(model, samples, feature,
                                              grid_size=grid_size)
        return {"attemptID": attempt_id, "snapshotID": snapshot,
                "feature": curve.feature, "grid": curve.grid,
                "values": curve.values, "baseline": curve.baseline,
                "thresholds": curve.thresholds}

    @app.get("/v1/interventions/queue", dependencies=[dep])
    def interventions_queue(snapshot: str = Query(...),
                            levels: str = Query(default="High,Medium,Low")):
        get_snapshot(snapshot)
        wanted = [lv.strip() for lv in levels.split(",") if lv.strip()]
        entries = intervention_queue(store, snapshot, wanted)
        return {"snapshotID": snapshot, "levels": wanted,
                "entries": [e.to_dict() for e in entries]}

    @app.post("/v1/interventions/{plan_id}/decision", dependencies=[dep])
    def interventions_decision(plan_id: str, req: DecisionRequest):
        get_snapshot(req.snapshot)
        try:
            action = DecisionAction(req.action)
        except ValueError:
            raise HTTPException(status_code=422,
                                detail=f"unknown action {req.action!r}")
        decision = InstructorDecision(
            plan_id=plan_id, action=action, actor=req.actor,
            timestamp=int(datetime.now(timezone.utc).timestamp()),
            strategies=tuple(req.strategies),
        )
        with app.state.decisions_lock:
            plan_store = load_plan_store(store, req.snapshot)
            before = len(plan_store.events())
            try:
                record = plan_store.record_decision(decision,
                                                    supersede=req.supersede)
            except UnknownPlan as exc:
                raise HTTPException(status_code=404,
                                    detail=f"unknown plan {exc.plan_id!r}")
            except InvalidTransition as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except UnknownStrategy as exc:
                raise HTTPException(status_code=422,
                                    detail=f"unknown strategy {exc.strategy_id!r}")
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            side = store.path(req.snapshot) / DECISIONS_FILE
            with side.open("ab") as fh:
                for event in plan_store.events()[before:]:
                    fh.write(json.dumps(event, sort_keys=True,
                                        separators=(",", ":")).encode() + b"\n")
        return {"plan": plan_to_dict(record.plan), "status": record.status.value,
                "active": list(record.active),
                "history": [list(h) for h in record.history],
                "decisions": len(record.decisions)}

    @app.get("/v1/metrics/{model_id}", dependencies=[dep])
    def model_metrics(model_id: str, snapshot: str = Query(...)):
        snap = get_snapshot(snapshot)
        trained = (snap.summary.get("train") or {}).get("kind", "")
        if model_id.lower() not in (trained.lower(), snap.model_ref, "model"):
            raise HTTPException(status_code=404,
                                detail=f"unknown model {model_id!r}")
        metrics = read_json_artifact(snapshot, "metrics")
        if metrics is None:
            raise HTTPException(status_code=404, detail="no metrics recorded")
        return {"modelID": trained, "snapshotID": snapshot, "metrics": metrics,
                "grid": (snap.summary.get("train") or {}).get("grid")}

    @app.post("/v1/synth/generate", dependencies=[dep])
    def synth_generate(req: SynthRequest):
        mix = req.mix or dict(DEFAULT_MIX)
        try:
            spec = CohortSpec(student_count=req.students, mix=mix, seed=req.seed)
            cohort = generate_cohort(spec)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        out_dir = Path(req.out_dir) if req.out_dir else (
            store.root / "synth" / f"cohort-{req.students}-{req.seed}")
        paths = write_cohort(cohort, out_dir)
        return {"students": req.students, "seed": req.seed,
                "attempts": len(cohort.attempts),
                "paths": {k: str(v) for k, v in paths.items()}}

    @app.get("/v1/snapshots", dependencies=[dep])
    def snapshots():
        return {"snapshots": store.list()}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="dashboard")
    return app
