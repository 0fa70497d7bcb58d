"""Append-only metadata journal: one JSON record per line.

Records carry a strictly increasing seq, an RFC 3339 UTC timestamp, a type
tag and a payload. A trailing partially-written record (or trailing
garbage) is tolerated on replay; a malformed record followed by valid ones
means real corruption and raises CorruptJournal.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from ..errors import CorruptJournal, IoFailure

RECORD_TYPES = (
    "image_enrolled",
    "version_appended",
    "review_marked",
    "annotator_registered",
    "task_event",
    "snapshot",
)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class JournalRecord:
    seq: int
    ts: str
    type: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "ts": self.ts, "type": self.type, "payload": self.payload},
            separators=(",", ":"))


def _parse_record(obj: Mapping) -> JournalRecord:
    seq = obj["seq"]
    ts = obj["ts"]
    rtype = obj["type"]
    payload = obj["payload"]
    if not isinstance(seq, int) or seq < 1:
        raise ValueError("seq must be a positive integer")
    if rtype not in RECORD_TYPES:
        raise ValueError(f"unknown record type {rtype!r}")
    if not isinstance(payload, dict) or not isinstance(ts, str):
        raise ValueError("bad record body")
    return JournalRecord(seq=seq, ts=ts, type=rtype, payload=payload)


def read_journal(path: str | Path) -> list[JournalRecord]:
    """Replay all records from a journal file.

    Raises CorruptJournal when a malformed record precedes a valid one or a
    snapshot appears anywhere but first.
    """
    path = Path(path)
    if not path.exists():
        return []
    records: list[JournalRecord] = []
    pending_error: str | None = None
    last_seq = 0
    with path.open("r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                record = _parse_record(obj)
                if record.seq <= last_seq:
                    raise ValueError(f"seq {record.seq} not increasing")
                if record.type == "snapshot" and records:
                    raise ValueError("snapshot record is not first")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if pending_error is None:
                    pending_error = f"line {lineno}: {exc}"
                continue
            if pending_error is not None:
                # a valid record after a malformed one: not a torn tail
                raise CorruptJournal(pending_error)
            records.append(record)
            last_seq = record.seq
    return records


class Journal:
    """Writer handle over the journal file."""

    def __init__(self, path: str | Path, fsync: bool = True, last_seq: int = 0):
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self._seq = last_seq
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")

    @property
    def last_seq(self) -> int:
        return self._seq

    def append(self, rtype: str, payload: dict) -> JournalRecord:
        """Write one record; it is flushed before this returns."""
        if rtype not in RECORD_TYPES:
            raise ValueError(f"unknown record type {rtype!r}")
        with self._lock:
            self._seq += 1
            record = JournalRecord(seq=self._seq, ts=utc_now(), type=rtype, payload=payload)
            try:
                self._fh.write(record.to_line() + "\n")
                self._fh.flush()
                if self.fsync:
                    os.fsync(self._fh.fileno())
            except OSError as exc:
                raise IoFailure(f"journal append failed: {exc}") from exc
            return record

    def rewrite(self, records: list[JournalRecord]) -> None:
        """Atomically replace the journal file contents (compaction)."""
        with self._lock:
            tmp = self.path.with_suffix(".compacting")
            try:
                with tmp.open("w", encoding="utf-8") as fh:
                    for record in records:
                        fh.write(record.to_line() + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
                self._fh.close()
                os.replace(tmp, self.path)
                self._fh = self.path.open("a", encoding="utf-8")
                if records:
                    self._seq = records[-1].seq
            except OSError as exc:
                raise IoFailure(f"journal compaction failed: {exc}") from exc

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                self._fh.close()
