"""Run configuration: defaults, TOML/JSON file loading, canonical digest."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

DEFAULT_DATA_DIR = "qs-data"


class UnknownConfigKey(ValueError):
    pass


class ConfigFileError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tz: str = "UTC"
    cutoff_days: int = 28
    seed: int = 0
    model_kind: str = "nn"
    grid: str = "default"  # "default" explores DEFAULT_GRIDS, "none" uses kind defaults
    folds: int = 4
    train_tags: tuple[str, ...] = ()  # empty: train on every labeled sample
    test_tag: str = ""  # empty: no held-out metrics
    background_size: int = 64
    coalition_budget: int = 64
    api_token: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["train_tags"] = list(self.train_tags)
        return out


def config_digest(config: RunConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def data_dir(override: str | os.PathLike | None = None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get("QS_DATA_DIR", DEFAULT_DATA_DIR))


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(name: str, value):
    if name == "train_tags":
        if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
            return tuple(value)
        raise ConfigFileError(f"{name}: expected a list of strings, got {value!r}")
    current = getattr(RunConfig(), name)
    if isinstance(current, bool) and not isinstance(value, bool):
        raise ConfigFileError(f"{name}: expected a boolean, got {value!r}")
    if isinstance(current, int) and not isinstance(value, bool) and isinstance(value, int):
        return value
    if isinstance(current, str) and isinstance(value, str):
        return value
    raise ConfigFileError(f"{name}: expected {type(current).__name__}, got {value!r}")


def config_from_mapping(doc: dict) -> RunConfig:
    """Flat or one-level sectioned mapping; section names are ignored."""
    flat: dict = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            for sub, subvalue in value.items():
                flat[sub] = subvalue
        else:
            flat[key] = value
    unknown = sorted(set(flat) - set(_FIELD_TYPES))
    if unknown:
        raise UnknownConfigKey(f"unknown config keys: {unknown}")
    return replace(RunConfig(), **{k: _coerce(k, v) for k, v in flat.items()})


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigFileError(f"config file not found: {p}")
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigFileError(f"{p}: {exc}") from exc
    else:
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigFileError(f"{p}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigFileError(f"{p}: top level must be a table/object")
    return config_from_mapping(doc)
