"""Append-only JSON-lines event log with snapshot support.

One event object per line, sequence numbers strictly increasing from 1.  The
log is the source of truth; a snapshot only shortcuts replay.  Verification
always reads the whole file so corruption anywhere is caught at startup, not
when the bad line is eventually replayed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path


class CorruptLog(Exception):
    """The event log failed verification; message names the offending line
    or sequence number."""


@dataclass(frozen=True)
class EventRecord:
    seq: int
    ts: datetime
    kind: str
    payload: dict
    idem_key: str | None = None

    def to_json(self) -> str:
        doc = {
            "seq": self.seq,
            "ts": self.ts.isoformat(),
            "kind": self.kind,
            "payload": self.payload,
        }
        if self.idem_key is not None:
            doc["idem_key"] = self.idem_key
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EventRecord":
        doc = json.loads(line)
        return cls(
            seq=doc["seq"],
            ts=datetime.fromisoformat(doc["ts"]),
            kind=doc["kind"],
            payload=doc["payload"],
            idem_key=doc.get("idem_key"),
        )


class EventLog:
    """Single-writer log bound to one file; the owner must serialize calls."""

    def __init__(self, path: Path):
        self.path = path
        self.last_seq = 0
        if path.exists():
            for record in self.read_all():
                self.last_seq = record.seq

    def read_all(self) -> list[EventRecord]:
        records: list[EventRecord] = []
        if not self.path.exists():
            return records
        prev = 0
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = EventRecord.from_json(line)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise CorruptLog(
                        f"line {lineno} (after seq {prev}) unreadable: {exc}"
                    ) from None
                if record.seq <= prev:
                    raise CorruptLog(
                        f"seq {record.seq} at line {lineno} not greater than {prev}"
                    )
                prev = record.seq
                records.append(record)
        return records

    def append(
        self,
        kind: str,
        payload: dict,
        *,
        idem_key: str | None = None,
        ts: datetime | None = None,
    ) -> EventRecord:
        record = EventRecord(
            seq=self.last_seq + 1,
            ts=ts or datetime.now(timezone.utc),
            kind=kind,
            payload=payload,
            idem_key=idem_key,
        )
        with self.path.open("a") as fh:
            fh.write(record.to_json() + "\n")
            fh.flush()
        self.last_seq = record.seq
        return record


def read_snapshot(path: Path) -> tuple[int, dict] | None:
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    return doc["through_seq"], doc["state"]


def write_snapshot(path: Path, through_seq: int, state: dict) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps({"through_seq": through_seq, "state": state}, sort_keys=True)
    )
    tmp.replace(path)
