"""Per-trial speech orchestration.

One engine owns everything audible in a trial: the shared microphone
gate, the streaming recognizer feeding the dictation replica, speech
boxes with their synthesizer dispatches, and content playback sessions.

State changes come out as :class:`Effect` records — broadcast envelope
type + payload, the attributed actor, and an optional event-log row —
so the transport layer stays free of speech logic and tests can drive
the engine directly on a manual clock.

The trial has exactly one speaker. Box plays queue FIFO behind whatever
is talking; starting content playback jumps the queue (it represents
the end user's own review, which operators prioritize); toggling
playback off frees the speaker immediately. Utterance timing chains off
the previous utterance's end, so schedules stay exact regardless of how
coarsely ``tick`` is called.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..clock import Clock
from ..crdt import Anchor, Doc
from ..errors import EmptyBox, EmptySegment, UnknownBox
from .providers import FINAL, SttProvider, TranscriptEvent, TtsProvider
from .segmenter import finalize_segment

EDITABLE = "EDITABLE"
PRESET = "PRESET"

SERVER_ACTOR = "server"


@dataclass(frozen=True)
class Effect:
    """One outward consequence of an engine call."""

    type: str  # envelope type to broadcast
    payload: dict
    actor_id: str
    log_event: Optional[tuple[str, dict]] = None  # (event_type, payload)


@dataclass
class MicState:
    on: bool = False
    changed_by: str = SERVER_ACTOR
    changed_at: int = 0

    def to_dict(self) -> dict:
        return {"on": self.on, "changedBy": self.changed_by, "changedAt": self.changed_at}


@dataclass
class SpeechBox:
    box_id: str
    kind: str  # EDITABLE | PRESET
    text: str

    def to_dict(self) -> dict:
        return {"boxId": self.box_id, "kind": self.kind, "text": self.text}


@dataclass
class _BoxJob:
    actor_id: str
    box_id: str
    text: str


@dataclass
class _PlaybackSession:
    actor_id: str
    lines: list[tuple[int, str]]  # (absolute start index, line text)
    next_line: int = 0
    end_index: int = 0
    speaking: bool = False  # holds the speaker right now


@dataclass
class SpeechEngine:
    doc: Doc  # the server's dictation replica
    stt: SttProvider
    tts: TtsProvider
    clock: Clock
    mic: MicState = field(default_factory=MicState)
    boxes: dict[str, SpeechBox] = field(default_factory=dict)
    dropped_chunks: int = 0
    empty_segments: int = 0
    _box_queue: deque = field(default_factory=deque)
    _playback: Optional[_PlaybackSession] = None
    _busy_until: Optional[int] = None
    _current_box: Optional[_BoxJob] = None

    # -- microphone --------------------------------------------------------

    def set_mic(self, actor_id: str, on: bool) -> list[Effect]:
        self.mic = MicState(on=on, changed_by=actor_id, changed_at=self.clock.now_ms())
        payload = self.mic.to_dict()
        return [Effect("MIC_STATE", payload, actor_id, ("MIC_SET", payload))]

    # -- dictation ----------------------------------------------------------

    def ingest_audio(self, actor_id: str, data: bytes) -> list[Effect]:
        """Feed one end-user audio chunk through the recognizer."""
        if not self.mic.on:
            self.dropped_chunks += 1
            return []
        effects: list[Effect] = []
        for event in self.stt.feed(data):
            effects.extend(self._transcript_effects(actor_id, event))
        return effects

    def flush_dictation(self, actor_id: str) -> list[Effect]:
        effects: list[Effect] = []
        for event in self.stt.flush():
            effects.extend(self._transcript_effects(actor_id, event))
        return effects

    def _transcript_effects(self, actor_id: str, event: TranscriptEvent) -> list[Effect]:
        if event.kind != FINAL:
            return [Effect("TRANSCRIPT_EVENT", event.to_dict(), actor_id)]
        try:
            sentence = finalize_segment(event.text)
        except EmptySegment:
            self.empty_segments += 1
            return []
        ops = self.doc.local_insert(len(self.doc.text()), sentence + "\n")
        wire_ops = [op.to_dict() for op in ops]
        final = TranscriptEvent(FINAL, sentence, event.segment_id)
        return [
            Effect(
                "TRANSCRIPT_EVENT",
                final.to_dict(),
                actor_id,
                ("TRANSCRIPT_COMMIT",
                 {"segmentId": event.segment_id, "text": sentence, "ops": wire_ops}),
            ),
            Effect("DOC_OP", {"ops": wire_ops}, SERVER_ACTOR),
        ]

    # -- speech boxes --------------------------------------------------------

    def upsert_box(self, actor_id: str, box_id: str, kind: str, text: str) -> list[Effect]:
        if kind not in (EDITABLE, PRESET):
            raise UnknownBox(f"bad box kind {kind!r}", box_id=box_id)
        box = SpeechBox(box_id=box_id, kind=kind, text=text)
        self.boxes[box_id] = box
        payload = box.to_dict()
        return [Effect("SPEECH_BOX_UPSERT", payload, actor_id,
                       ("SPEECH_BOX_UPSERT", payload))]

    def play_box(self, actor_id: str, box_id: str) -> list[Effect]:
        box = self.boxes.get(box_id)
        if box is None:
            raise UnknownBox(f"no box {box_id!r}", box_id=box_id)
        if not box.text:
            raise EmptyBox(f"box {box_id!r} has no text", box_id=box_id)
        job = _BoxJob(actor_id=actor_id, box_id=box_id, text=box.text)
        queued = self._speaker_busy()
        effects = [Effect(
            "SPEECH_PLAY",
            {"boxId": box_id, "text": job.text, "queued": queued},
            actor_id,
            ("SPEECH_PLAY", {"boxId": box_id, "text": job.text, "queued": queued}),
        )]
        if box.kind == EDITABLE:
            box.text = ""
            payload = box.to_dict()
            effects.append(Effect("SPEECH_BOX_UPSERT", payload, actor_id,
                                  ("SPEECH_BOX_UPSERT", payload)))
        if queued:
            self._box_queue.append(job)
        else:
            effects.extend(self._start_box(job, self.clock.now_ms()))
        return effects

    # -- content playback -----------------------------------------------------

    def toggle_playback(self, actor_id: str, from_anchor: Optional[Anchor]) -> list[Effect]:
        if self._playback is not None:
            return self._stop_playback("PLAYBACK_TOGGLE")
        start_index = 0 if from_anchor is None else self.doc.resolve_index(from_anchor)
        lines = self._lines_from(start_index)
        session = _PlaybackSession(
            actor_id=actor_id,
            lines=lines,
            end_index=len(self.doc.text()),
        )
        self._playback = session
        effects = [Effect(
            "PLAYBACK_TOGGLE", {"action": "START", "fromIndex": start_index},
            actor_id, ("PLAYBACK_TOGGLE", {"action": "START", "fromIndex": start_index}),
        )]
        if not self._speaker_busy():
            effects.extend(self._advance_playback(self.clock.now_ms()))
        return effects

    def _lines_from(self, start_index: int) -> list[tuple[int, str]]:
        """Non-empty lines of the current text from start_index, with the
        absolute index where each one begins."""
        text = self.doc.text()
        lines: list[tuple[int, str]] = []
        offset = 0
        for line in text.split("\n"):
            line_end = offset + len(line)
            if line and line_end > start_index:
                begin = max(offset, start_index)
                lines.append((begin, text[begin:line_end]))
            offset = line_end + 1
        return lines

    def _stop_playback(self, via: str) -> list[Effect]:
        session = self._playback
        assert session is not None
        self._playback = None
        if session.speaking:
            self._busy_until = None  # cut the utterance short
        progress = (
            session.lines[session.next_line - 1][0]
            if session.speaking and session.next_line > 0
            else session.end_index
        )
        payload = {"active": False, "progressIndex": progress, "stopped": True}
        effects = [Effect(
            "PLAYBACK_STATE", payload, session.actor_id,
            ("PLAYBACK_TOGGLE", {"action": "STOP", "progressIndex": progress}),
        )]
        if not self._speaker_busy():
            effects.extend(self._start_next(self.clock.now_ms()))
        return effects

    # -- speaker scheduling ----------------------------------------------------

    def tick(self, now_ms: int) -> list[Effect]:
        """Finish any utterance whose end time has passed; chain the next."""
        effects: list[Effect] = []
        while self._busy_until is not None and self._busy_until <= now_ms:
            ended_at = self._busy_until
            self._busy_until = None
            if self._current_box is not None:
                job, self._current_box = self._current_box, None
                effects.append(Effect(
                    "SPEAKER_STATE",
                    {"active": False, "boxId": job.box_id},
                    job.actor_id,
                ))
                effects.extend(self._start_next(ended_at))
            elif self._playback is not None:
                effects.extend(self._advance_playback(ended_at))
            # else: a stop already released the speaker
        return effects

    def _speaker_busy(self) -> bool:
        return self._busy_until is not None

    def _start_next(self, at_ms: int) -> list[Effect]:
        """Speaker just freed: playback (if pending) outranks queued boxes."""
        if self._playback is not None and not self._playback.speaking:
            return self._advance_playback(at_ms)
        if self._box_queue:
            return self._start_box(self._box_queue.popleft(), at_ms)
        return []

    def _start_box(self, job: _BoxJob, at_ms: int) -> list[Effect]:
        duration = self.tts.speak(job.text)
        self._current_box = job
        self._busy_until = at_ms + duration
        return [Effect(
            "SPEAKER_STATE",
            {"active": True, "boxId": job.box_id, "durationMs": duration},
            job.actor_id,
        )]

    def _advance_playback(self, at_ms: int) -> list[Effect]:
        session = self._playback
        assert session is not None
        if session.next_line >= len(session.lines):
            self._playback = None
            effects = [Effect(
                "PLAYBACK_STATE",
                {"active": False, "progressIndex": session.end_index},
                session.actor_id,
            )]
            effects.extend(self._start_next(at_ms))
            return effects
        index, line = session.lines[session.next_line]
        session.next_line += 1
        session.speaking = True
        duration = self.tts.speak(line)
        self._busy_until = at_ms + duration
        return [Effect(
            "PLAYBACK_STATE",
            {"active": True, "progressIndex": index, "durationMs": duration},
            session.actor_id,
        )]
