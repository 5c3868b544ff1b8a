"""Disengagement detection for voluntary LMS quizzes.

Pipeline: ingest quiz/log exports -> daily activity records -> per-day
feature vectors -> classifier zoo -> Shapley attributions -> behavior
flags and risk tiers -> intervention plans.  Served through a CLI (`qs`),
a JSON HTTP API, and file-backed snapshots.
"""

__version__ = "0.1.0"
