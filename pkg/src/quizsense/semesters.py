"""Semester calendar: maps timestamps to semester tags for splits and reports."""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class SemesterCalendar:
    """Ordered (tag, start_ts, end_ts) windows; end exclusive."""

    windows: tuple[tuple[str, int, int], ...]

    def tag_for(self, ts: int) -> str | None:
        for tag, start, end in self.windows:
            if start <= ts < end:
                return tag
        return None

    @property
    def tags(self) -> list[str]:
        return [tag for tag, _, _ in self.windows]

    def to_json(self) -> bytes:
        payload = [{"tag": t, "start": s, "end": e} for t, s, e in self.windows]
        return json.dumps(payload, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes) -> "SemesterCalendar":
        rows = json.loads(data.decode("utf-8"))
        return cls(windows=tuple((r["tag"], r["start"], r["end"]) for r in rows))
