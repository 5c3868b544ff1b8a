import sys, pathlib
sys.path.insert(0, str(pathlib.Path(__file__).parent))

import pytest

from quizsense.config import RunConfig
from quizsense.pipeline import SnapshotStore, run_pipeline
from quizsense.synth import DEFAULT_MIX, CohortSpec, generate_cohort, write_cohort


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """One 16-student pipeline run shared by the service-layer tests."""
    root = tmp_path_factory.mktemp("run")
    cohort = generate_cohort(CohortSpec(student_count=16, mix=DEFAULT_MIX, seed=13))
    paths = write_cohort(cohort, root / "in")
    cfg = RunConfig(seed=13, cutoff_days=16, test_tag="S4")
    store = SnapshotStore(root / "store")
    snap = run_pipeline(cfg, paths["quiz"], paths["logs"],
                        calendar_path=paths["calendar"],
                        grades_path=paths["grades"], store=store)
    return {"store": store, "snapshot": snap, "paths": paths,
            "config": cfg, "cohort": cohort}
