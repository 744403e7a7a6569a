"""Speech-to-text and text-to-speech providers.

The bundled providers are deterministic mocks so the whole pipeline is
testable without audio hardware or vendor accounts:

* ``MockStt`` treats chunk bytes as UTF-8 text, buffering until a
  newline (or explicit flush) closes a segment. Each chunk yields an
  INTERIM carrying the segment's pending text; each newline yields
  exactly one FINAL.
* ``MockTts`` prices an utterance at ``200 + 50 × len(text)`` ms and
  records everything it was asked to speak.

``ExternalCommandStt`` is the escape hatch for real engines: it speaks
a tiny line protocol to a child process (one base64 chunk per request
line, one JSON event array per response line) so any vendor can be
wrapped in a few lines of glue without linking the server to it.
"""

from __future__ import annotations

import base64
import json
import subprocess
from dataclasses import dataclass
from typing import Optional, Protocol

from ..errors import MalformedOp

INTERIM = "INTERIM"
FINAL = "FINAL"


@dataclass(frozen=True)
class TranscriptEvent:
    kind: str  # INTERIM | FINAL
    text: str
    segment_id: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "text": self.text, "segmentId": self.segment_id}


class SttProvider(Protocol):
    def feed(self, chunk: bytes) -> list[TranscriptEvent]: ...
    def flush(self) -> list[TranscriptEvent]: ...
    def close(self) -> None: ...


class TtsProvider(Protocol):
    def speak(self, text: str) -> int:
        """Dispatch an utterance; returns its duration in ms."""
        ...


class MockStt:
    """Deterministic text-mode recognizer (one segment per newline)."""

    def __init__(self):
        self._buffer = ""
        self._segment_id = 1

    def feed(self, chunk: bytes) -> list[TranscriptEvent]:
        text = chunk.decode("utf-8", errors="replace")
        if not text:
            return []
        events: list[TranscriptEvent] = []
        pieces = text.split("\n")
        for i, piece in enumerate(pieces):
            self._buffer += piece
            closes_segment = i < len(pieces) - 1
            if closes_segment:
                if self._buffer:
                    events.append(TranscriptEvent(INTERIM, self._buffer, self._segment_id))
                events.append(TranscriptEvent(FINAL, self._buffer, self._segment_id))
                self._buffer = ""
                self._segment_id += 1
            elif piece:
                events.append(TranscriptEvent(INTERIM, self._buffer, self._segment_id))
        return events

    def flush(self) -> list[TranscriptEvent]:
        if not self._buffer:
            return []
        event = TranscriptEvent(FINAL, self._buffer, self._segment_id)
        self._buffer = ""
        self._segment_id += 1
        return [event]

    def close(self) -> None:
        pass


class MockTts:
    """Fixed-rate pseudo synthesizer; keeps a transcript of dispatches."""

    BASE_MS = 200
    PER_SCALAR_MS = 50

    def __init__(self):
        self.spoken: list[str] = []

    def speak(self, text: str) -> int:
        self.spoken.append(text)
        return self.BASE_MS + self.PER_SCALAR_MS * len(text)


class ExternalCommandStt:
    """Bridge to a recognizer child process over a line protocol.

    Request lines:  ``CHUNK <base64>`` or ``FLUSH``.
    Response lines: one JSON array of {kind, text, segmentId} objects.
    """

    def __init__(self, argv: list[str]):
        self._proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def feed(self, chunk: bytes) -> list[TranscriptEvent]:
        return self._round_trip("CHUNK " + base64.b64encode(chunk).decode())

    def flush(self) -> list[TranscriptEvent]:
        return self._round_trip("FLUSH")

    def close(self) -> None:
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.wait(timeout=10)

    def _round_trip(self, request: str) -> list[TranscriptEvent]:
        assert self._proc.stdin and self._proc.stdout
        self._proc.stdin.write(request + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise MalformedOp("recognizer process closed its output")
        try:
            rows = json.loads(line)
            return [
                TranscriptEvent(str(r["kind"]), str(r["text"]), int(r["segmentId"]))
                for r in rows
            ]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedOp(f"bad recognizer response: {exc}") from exc


def make_stt(provider: str, command: Optional[list[str]] = None) -> SttProvider:
    if provider == "mock":
        return MockStt()
    if provider == "external-command":
        if not command:
            raise ValueError("external-command recognizer needs a command")
        return ExternalCommandStt(command)
    raise ValueError(f"unknown stt provider {provider!r}")
