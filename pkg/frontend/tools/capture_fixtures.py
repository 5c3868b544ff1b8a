"""Regenerate tests/fixtures/*.json from a real pipeline run.

Run from the repository root with the package installed:

    python3 frontend/tools/capture_fixtures.py

Every fixture is a byte-for-byte response from the /v1 API over a seeded
synthetic cohort, including the decision lifecycle (approve, the 409 on a
double approve, then a superseding override).
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from quizsense.api import create_app
from quizsense.config import RunConfig
from quizsense.pipeline import SnapshotStore, run_pipeline
from quizsense.synth import DEFAULT_MIX, CohortSpec, generate_cohort, write_cohort

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(f"wrote {name}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        cohort = generate_cohort(CohortSpec(student_count=16, mix=DEFAULT_MIX,
                                            seed=13))
        paths = write_cohort(cohort, root / "in")
        store = SnapshotStore(root / "store")
        snap = run_pipeline(RunConfig(seed=13, cutoff_days=16, test_tag="S4"),
                            paths["quiz"], paths["logs"],
                            calendar_path=paths["calendar"],
                            grades_path=paths["grades"], store=store)
        sid = snap.snapshot_id

        client = TestClient(create_app(store))
        dump("summary.json", client.get(f"/v1/cohort/{sid}/summary").json())
        dump("snapshots.json", client.get("/v1/snapshots").json())

        queue = client.get("/v1/interventions/queue",
                           params={"snapshot": sid}).json()
        dump("queue.json", queue)

        entry = queue["entries"][0]
        student = entry["studentID"]
        dump("student_risk.json",
             client.get(f"/v1/students/{student}/risk",
                        params={"snapshot": sid}).json())
        dump("explanation.json",
             client.get(f"/v1/attempts/{entry['attemptID']}/explanation",
                        params={"snapshot": sid}).json())
        dump("dependence.json",
             client.get(f"/v1/attempts/{entry['attemptID']}"
                        "/dependence/days_inactive",
                        params={"snapshot": sid}).json())
        kind = snap.summary["train"]["kind"].lower()
        dump("metrics.json",
             client.get(f"/v1/metrics/{kind}", params={"snapshot": sid}).json())

        plan_id = entry["planID"]
        approve = client.post(f"/v1/interventions/{plan_id}/decision",
                              json={"action": "Approve", "actor": "instructor-1",
                                    "snapshot": sid})
        dump("decision_approve.json", approve.json())
        dup = client.post(f"/v1/interventions/{plan_id}/decision",
                          json={"action": "Approve", "actor": "instructor-1",
                                "snapshot": sid})
        dump("decision_conflict.json",
             {"status_code": dup.status_code, "body": dup.json()})
        override = client.post(
            f"/v1/interventions/{plan_id}/decision",
            json={"action": "Override", "actor": "instructor-1",
                  "snapshot": sid, "supersede": True,
                  "strategies": ["motivational-messages",
                                 "deadline-reminders"]})
        dump("decision_override.json", override.json())


if __name__ == "__main__":
    main()
