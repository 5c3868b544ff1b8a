"""Snapshot store, orchestration, and queue behaviour."""

import dataclasses
import json

import pytest

from quizsense.config import RunConfig, config_digest
from quizsense.intervene import DecisionAction, InstructorDecision
from quizsense.pipeline import (
    SnapshotIntegrityError,
    SnapshotStore,
    StageError,
    UnknownSnapshot,
    append_decision_event,
    intervention_queue,
    load_plan_store,
    resolve_model_kind,
    run_pipeline,
    snapshot_id_for,
)
from quizsense.models.base import ModelKind

SEVERITY = {"High": 0, "Medium": 1, "Low": 2, "Engaged": 3}


def test_snapshot_artifacts_present(small_run):
    snap = small_run["snapshot"]
    for name in ("daily", "features", "model", "metrics", "explanations",
                 "risk", "risk_summary", "catalog", "plans", "report"):
        assert name in snap.artifacts, name
        assert name in snap.artifact_digests


def test_rerun_reuses_snapshot(small_run):
    cfg, paths, store = small_run["config"], small_run["paths"], small_run["store"]
    again = run_pipeline(cfg, paths["quiz"], paths["logs"],
                         calendar_path=paths["calendar"],
                         grades_path=paths["grades"], store=store)
    assert again.snapshot_id == small_run["snapshot"].snapshot_id
    assert again.artifact_digests == small_run["snapshot"].artifact_digests


def test_determinism_across_stores(small_run, tmp_path):
    cfg, paths = small_run["config"], small_run["paths"]
    other = SnapshotStore(tmp_path / "fresh")
    snap = run_pipeline(cfg, paths["quiz"], paths["logs"],
                        calendar_path=paths["calendar"],
                        grades_path=paths["grades"], store=other)
    assert snap.snapshot_id == small_run["snapshot"].snapshot_id
    assert snap.artifact_digests == small_run["snapshot"].artifact_digests


def test_config_change_changes_snapshot_id(small_run):
    cfg = small_run["config"]
    bumped = dataclasses.replace(cfg, seed=cfg.seed + 1)
    digests = {"quiz": "00", "logs": "11"}
    assert snapshot_id_for(digests, config_digest(cfg)) != \
        snapshot_id_for(digests, config_digest(bumped))


def test_verify_passes_then_catches_tampering(small_run, tmp_path):
    cfg, paths = small_run["config"], small_run["paths"]
    store = SnapshotStore(tmp_path / "tamper")
    snap = run_pipeline(cfg, paths["quiz"], paths["logs"],
                        calendar_path=paths["calendar"],
                        grades_path=paths["grades"], store=store)
    store.verify(snap.snapshot_id)
    target = store.path(snap.snapshot_id) / snap.artifacts["risk_summary"]
    target.write_bytes(b'{"tampered": true}')
    with pytest.raises(SnapshotIntegrityError):
        store.verify(snap.snapshot_id)


def test_unknown_snapshot_raises(small_run):
    with pytest.raises(UnknownSnapshot):
        small_run["store"].load("feedbeef00000000")


def test_missing_input_is_an_ingest_error(small_run, tmp_path):
    cfg, paths = small_run["config"], small_run["paths"]
    with pytest.raises(StageError) as err:
        run_pipeline(cfg, tmp_path / "nope.csv", paths["logs"],
                     store=SnapshotStore(tmp_path / "s"))
    assert err.value.stage == "ingest"
    assert "ingest" in str(err.value)


def test_garbage_quiz_is_an_ingest_error(small_run, tmp_path):
    cfg, paths = small_run["config"], small_run["paths"]
    bad = tmp_path / "bad.csv"
    bad.write_text("just,three,words\n1,2,3\n")
    with pytest.raises(StageError) as err:
        run_pipeline(cfg, bad, paths["logs"], store=SnapshotStore(tmp_path / "s"))
    assert err.value.stage == "ingest"


def test_resolve_model_kind():
    assert resolve_model_kind("nn") is ModelKind.NN
    assert resolve_model_kind("XGBlike") is ModelKind.XGBLIKE
    assert resolve_model_kind("linear-svm") is ModelKind.LINEAR_SVM
    with pytest.raises(ValueError):
        resolve_model_kind("perceptron9000")


def test_queue_sorted_by_severity_then_shap(small_run):
    entries = intervention_queue(small_run["store"],
                                 small_run["snapshot"].snapshot_id)
    assert entries, "expected a non-empty queue"
    keys = [(SEVERITY[e.risk_level], sum(e.shap_sums.values())) for e in entries]
    assert keys == sorted(keys)
    assert all(e.risk_level != "Engaged" for e in entries)


def test_queue_one_entry_per_sample(small_run):
    entries = intervention_queue(small_run["store"],
                                 small_run["snapshot"].snapshot_id)
    seen = {(e.student_id, e.attempt_id, e.date_rel) for e in entries}
    assert len(seen) == len(entries)


def test_queue_level_filter(small_run):
    sid = small_run["snapshot"].snapshot_id
    high_only = intervention_queue(small_run["store"], sid, levels=("High",))
    assert all(e.risk_level == "High" for e in high_only)
    none = intervention_queue(small_run["store"], sid, levels=())
    assert none == []


def test_decisions_survive_reload_without_touching_snapshot(small_run):
    store, snap = small_run["store"], small_run["snapshot"]
    plans = load_plan_store(store, snap.snapshot_id)
    pid = next(p for p in sorted(plans.plan_ids())
               if plans.get(p).status.value == "Pending")
    decision = InstructorDecision(plan_id=pid, action=DecisionAction.APPROVE,
                                  actor="t-1", timestamp=1_700_000_000)
    before = len(plans.events())
    plans.record_decision(decision)
    for event in plans.events()[before:]:
        append_decision_event(store, snap.snapshot_id, event)

    reloaded = load_plan_store(store, snap.snapshot_id)
    assert reloaded.get(pid).status.value == "Approved"
    store.verify(snap.snapshot_id)  # side log must not break integrity
