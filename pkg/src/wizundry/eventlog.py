"""Append-only per-trial operation record.

Every operator and end-user action lands here in chronological order,
one dense sequence per trial, so a session can be reconstructed or
analyzed after the fact. Rows that touch the document carry the raw
replicated ops in their payload, which is what makes replay exact: a
fresh replica fed those ops reproduces the final text byte for byte.

Storage is one line-delimited JSON file per trial (opened append-only,
flushed per append); the seq → row index lives in memory and is rebuilt
on load. Exports use a fixed CSV schema with canonical JSON payloads so
export → parse → export is byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Optional

from .annotations import Annotation, AnnotationStore, LabelDef
from .clock import Clock, SystemClock
from .crdt import Doc, new_doc
from .errors import MalformedOp, StorageFull

CSV_HEADER = ["seq", "timestamp_ms", "trial_id", "actor_id", "role", "event_type", "payload"]

EVENT_TYPES = frozenset({
    "JOIN", "LEAVE", "DOC_INSERT", "DOC_DELETE", "DOC_MARK", "MIC_SET",
    "SPEECH_BOX_UPSERT", "SPEECH_PLAY", "PLAYBACK_TOGGLE", "TRANSCRIPT_COMMIT",
    "LABEL_DEF", "ANNOTATION_ADD", "ANNOTATION_DELETE", "FEATURE_UPDATE",
    "TRIAL_OPEN", "TRIAL_CLOSE", "ERROR",
})


@dataclass(frozen=True)
class LogEvent:
    seq: int
    timestamp_ms: int
    trial_id: str
    actor_id: str
    role: str
    event_type: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp_ms": self.timestamp_ms,
            "trial_id": self.trial_id,
            "actor_id": self.actor_id,
            "role": self.role,
            "event_type": self.event_type,
            "payload": self.payload,
        }

    @staticmethod
    def from_dict(raw: dict) -> "LogEvent":
        return LogEvent(
            seq=int(raw["seq"]),
            timestamp_ms=int(raw["timestamp_ms"]),
            trial_id=str(raw["trial_id"]),
            actor_id=str(raw["actor_id"]),
            role=str(raw["role"]),
            event_type=str(raw["event_type"]),
            payload=dict(raw["payload"]),
        )


class EventLog:
    """One trial's record. Single appender (the trial queue); readers copy."""

    def __init__(
        self,
        trial_id: str,
        data_dir: Optional[str] = None,
        clock: Optional[Clock] = None,
        max_events: Optional[int] = None,
    ):
        self.trial_id = trial_id
        self.clock = clock or SystemClock()
        self.max_events = max_events
        self._events: list[LogEvent] = []
        self._file = None
        if data_dir is not None:
            os.makedirs(data_dir, exist_ok=True)
            self._path = os.path.join(data_dir, f"{trial_id}.log.jsonl")
            self._load_existing()
            self._file = open(self._path, "a", encoding="utf-8")

    def _load_existing(self) -> None:
        if not os.path.exists(self._path):
            return
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._events.append(LogEvent.from_dict(json.loads(line)))

    def append(self, actor_id: str, role: str, event_type: str, payload: dict) -> int:
        if event_type not in EVENT_TYPES:
            raise MalformedOp(f"unknown event type {event_type!r}")
        if self.max_events is not None and len(self._events) >= self.max_events:
            raise StorageFull(f"trial log capped at {self.max_events} events")
        previous = self._events[-1].timestamp_ms if self._events else 0
        event = LogEvent(
            seq=len(self._events) + 1,
            # never let a clock step backwards break seq-order monotonicity
            timestamp_ms=max(previous, self.clock.now_ms()),
            trial_id=self.trial_id,
            actor_id=actor_id,
            role=role,
            event_type=event_type,
            payload=payload,
        )
        if self._file is not None:
            try:
                self._file.write(_canonical_json(event.to_dict()) + "\n")
                self._file.flush()
            except OSError as exc:
                raise StorageFull(f"cannot append to trial log: {exc}") from exc
        self._events.append(event)
        return event.seq

    def events(self) -> list[LogEvent]:
        return list(self._events)

    def query(
        self,
        actor_id: Optional[str] = None,
        event_type: Optional[str] = None,
        time_range: Optional[tuple[int, int]] = None,
    ) -> list[LogEvent]:
        """Filtered scan in seq order; all filters optional and conjunctive."""
        out = []
        for event in self._events:
            if actor_id is not None and event.actor_id != actor_id:
                continue
            if event_type is not None and event.event_type != event_type:
                continue
            if time_range is not None and not (
                time_range[0] <= event.timestamp_ms <= time_range[1]
            ):
                continue
            out.append(event)
        return out

    def export_csv(self) -> bytes:
        return export_csv(self._events)

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


def _canonical_json(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def export_csv(events: list[LogEvent]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for event in events:
        writer.writerow([
            event.seq,
            event.timestamp_ms,
            event.trial_id,
            event.actor_id,
            event.role,
            event.event_type,
            _canonical_json(event.payload),
        ])
    return buffer.getvalue().encode("utf-8")


def import_csv(data: bytes) -> list[LogEvent]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedOp("empty export") from None
    if header != CSV_HEADER:
        raise MalformedOp(f"unexpected header {header!r}")
    events = []
    for row in reader:
        if len(row) != len(CSV_HEADER):
            raise MalformedOp(f"row {reader.line_num} has {len(row)} fields")
        try:
            events.append(LogEvent(
                seq=int(row[0]),
                timestamp_ms=int(row[1]),
                trial_id=row[2],
                actor_id=row[3],
                role=row[4],
                event_type=row[5],
                payload=json.loads(row[6]),
            ))
        except (ValueError, json.JSONDecodeError) as exc:
            raise MalformedOp(f"row {reader.line_num}: {exc}") from exc
    return events


def replay_events(events: list[LogEvent]) -> tuple[Doc, AnnotationStore]:
    """Rebuild document and annotations from a trial record.

    Only rows that carry replicated state matter; everything else
    (joins, mic flips, plays) is ambient history. Op application is
    idempotent, so a row accidentally delivered twice changes nothing.
    """
    doc = new_doc(replica=0)
    store = AnnotationStore()
    for event in events:
        if event.event_type in ("DOC_INSERT", "DOC_DELETE", "DOC_MARK", "TRANSCRIPT_COMMIT"):
            doc.apply_remote(event.payload.get("ops", []))
        elif event.event_type == "LABEL_DEF":
            store.integrate_label(LabelDef.from_dict(event.payload))
        elif event.event_type == "ANNOTATION_ADD":
            store.integrate(Annotation.from_dict(event.payload))
        elif event.event_type == "ANNOTATION_DELETE":
            store.remove(event.payload["annoId"])
    return doc, store
