"""On-disk model format: a canonical-JSON document with magic "qsm".

Layout (version 1):
  {"format": "qsm", "version": 1,
   "spec": {"kind", "hyperparams", "seed"},
   "standardizer": {"mean": [...], "sd": [...]} | null,
   "params": <estimator state, kind-specific>,
   "metadata": {...}}
Keys are sorted and floats use shortest round-trip repr, so identical
models serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from .base import ModelSpec, Standardizer, TrainedModel
from .zoo import ESTIMATOR_CLASSES

FORMAT_NAME = "qsm"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def save_model(model: TrainedModel) -> bytes:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "standardizer": model.standardizer.to_state() if model.standardizer else None,
        "params": model.estimator.to_state(),
        "metadata": model.metadata,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def load_model(data: bytes) -> TrainedModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"not a model file: {exc}") from exc
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"unexpected format {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r}")
    spec = ModelSpec.from_dict(doc["spec"])
    estimator = ESTIMATOR_CLASSES[spec.kind].from_state(doc["params"],
                                                        spec.hyperparams)
    standardizer = (Standardizer.from_state(doc["standardizer"])
                    if doc.get("standardizer") else None)
    return TrainedModel(spec=spec, estimator=estimator,
                        standardizer=standardizer,
                        metadata=doc.get("metadata", {}))


def save_model_file(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_bytes(save_model(model))


def load_model_file(path: str | Path) -> TrainedModel:
    return load_model(Path(path).read_bytes())
