"""Room-scoped wire protocol: envelopes, framing, and the routing matrix.

An :class:`Envelope` is one message between a client and the server. On
the wire it is a single UTF-8 text frame — an ASCII decimal byte-length
prefix, a newline, then one JSON object — readable in a packet dump and
identical over any transport that preserves frame boundaries.

This module is pure data and tables. Who may *send* each envelope type,
which feature unlocks it, and who *receives* it when the server fans it
out are all declared here so the routing layer and the exhaustive
matrix tests read from the same source of truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .auth import ADMIN, END_USER, WIZARD
from .errors import DecodeError
from .trials import (
    COLLAB_EDITOR,
    CONTENT_PLAYBACK,
    HIGHLIGHTS,
    LABELS,
    MIC_CONTROL,
    PRESENCE_CURSORS,
    SPEECH_BOXES,
    SUMMARY_NOTES,
)

HELLO = "HELLO"
WELCOME = "WELCOME"
SYNC_REQUEST = "SYNC_REQUEST"
SYNC_RESPONSE = "SYNC_RESPONSE"
DOC_OP = "DOC_OP"
AWARENESS = "AWARENESS"
MIC_SET = "MIC_SET"
MIC_STATE = "MIC_STATE"
SPEECH_BOX_UPSERT = "SPEECH_BOX_UPSERT"
SPEECH_PLAY = "SPEECH_PLAY"
SPEAKER_STATE = "SPEAKER_STATE"
PLAYBACK_TOGGLE = "PLAYBACK_TOGGLE"
PLAYBACK_STATE = "PLAYBACK_STATE"
AUDIO_CHUNK = "AUDIO_CHUNK"
TRANSCRIPT_EVENT = "TRANSCRIPT_EVENT"
LABEL_DEF = "LABEL_DEF"
ANNOTATION_OP = "ANNOTATION_OP"
FEATURE_UPDATE = "FEATURE_UPDATE"
TRIAL_EVENT = "TRIAL_EVENT"
ERROR = "ERROR"

ENVELOPE_TYPES = (
    HELLO, WELCOME, SYNC_REQUEST, SYNC_RESPONSE, DOC_OP, AWARENESS, MIC_SET,
    MIC_STATE, SPEECH_BOX_UPSERT, SPEECH_PLAY, SPEAKER_STATE, PLAYBACK_TOGGLE,
    PLAYBACK_STATE, AUDIO_CHUNK, TRANSCRIPT_EVENT, LABEL_DEF, ANNOTATION_OP,
    FEATURE_UPDATE, TRIAL_EVENT, ERROR,
)

# Who receives a server broadcast of each type.
AUDIENCE_ALL = "ALL"                      # every connection in the trial
AUDIENCE_WIZARDS_ADMIN = "WIZARDS_ADMIN"  # operators and observers, not the end user
AUDIENCE_ACTOR = "ACTOR"                  # exactly one targeted actor
AUDIENCE_SENDER = "SENDER"                # direct reply, never fanned out
AUDIENCE_NONE = "NONE"                    # consumed server-side

BROADCAST_AUDIENCE = {
    WELCOME: AUDIENCE_SENDER,
    SYNC_RESPONSE: AUDIENCE_SENDER,
    DOC_OP: AUDIENCE_ALL,
    AWARENESS: AUDIENCE_WIZARDS_ADMIN,
    MIC_STATE: AUDIENCE_ALL,
    SPEECH_BOX_UPSERT: AUDIENCE_WIZARDS_ADMIN,
    SPEECH_PLAY: AUDIENCE_WIZARDS_ADMIN,
    SPEAKER_STATE: AUDIENCE_ALL,
    PLAYBACK_TOGGLE: AUDIENCE_WIZARDS_ADMIN,
    PLAYBACK_STATE: AUDIENCE_ALL,
    AUDIO_CHUNK: AUDIENCE_NONE,
    TRANSCRIPT_EVENT: AUDIENCE_ALL,
    LABEL_DEF: AUDIENCE_ALL,
    ANNOTATION_OP: AUDIENCE_ALL,
    FEATURE_UPDATE: AUDIENCE_ACTOR,
    TRIAL_EVENT: AUDIENCE_ALL,
    ERROR: AUDIENCE_SENDER,
}

# Which roles may send each type. Types absent here are server-emitted
# only; a client sending one gets FORBIDDEN.
SENDER_ROLES = {
    HELLO: {ADMIN, WIZARD, END_USER},
    SYNC_REQUEST: {ADMIN, WIZARD, END_USER},
    DOC_OP: {WIZARD},
    AWARENESS: {WIZARD},
    MIC_SET: {WIZARD},
    SPEECH_BOX_UPSERT: {WIZARD},
    SPEECH_PLAY: {WIZARD},
    PLAYBACK_TOGGLE: {WIZARD},
    LABEL_DEF: {WIZARD},
    ANNOTATION_OP: {WIZARD},
    AUDIO_CHUNK: {END_USER},
}

# Feature a wizard needs before the server will act on the type.
WIZARD_FEATURE_GATES = {
    DOC_OP: COLLAB_EDITOR,
    AWARENESS: PRESENCE_CURSORS,
    MIC_SET: MIC_CONTROL,
    SPEECH_BOX_UPSERT: SPEECH_BOXES,
    SPEECH_PLAY: SPEECH_BOXES,
    PLAYBACK_TOGGLE: CONTENT_PLAYBACK,
    LABEL_DEF: LABELS,
}

# ANNOTATION_OP is gated by the annotation kind it carries.
ANNOTATION_KIND_GATES = {
    "LABEL": LABELS,
    "HIGHLIGHT": HIGHLIGHTS,
    "NOTE": SUMMARY_NOTES,
}

OUTBOX_LIMIT = 1000  # queued envelopes per connection before SLOW_CONSUMER


@dataclass(frozen=True)
class Envelope:
    type: str
    trial_id: Optional[str] = None
    actor_id: Optional[str] = None
    server_seq: Optional[int] = None
    payload: dict = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.payload is None:
            object.__setattr__(self, "payload", {})

    def to_dict(self) -> dict:
        out: dict = {"type": self.type, "payload": self.payload}
        if self.trial_id is not None:
            out["trialId"] = self.trial_id
        if self.actor_id is not None:
            out["actorId"] = self.actor_id
        if self.server_seq is not None:
            out["serverSeq"] = self.server_seq
        return out


def encode(envelope: Envelope) -> bytes:
    body = json.dumps(envelope.to_dict(), ensure_ascii=False, sort_keys=True)
    raw = body.encode("utf-8")
    return str(len(raw)).encode("ascii") + b"\n" + raw


def decode(data: bytes) -> Envelope:
    """Parse exactly one frame; DECODE_ERROR carries the failing offset."""
    newline = data.find(b"\n")
    if newline < 0:
        raise DecodeError("frame has no length prefix", offset=len(data))
    prefix = data[:newline]
    if not prefix.isdigit():
        raise DecodeError(f"bad length prefix {prefix!r}", offset=0)
    length = int(prefix)
    body_start = newline + 1
    body = data[body_start : body_start + length]
    if len(body) < length:
        raise DecodeError(
            f"truncated frame: expected {length} body bytes, got {len(body)}",
            offset=len(data),
        )
    if len(data) > body_start + length:
        raise DecodeError("trailing bytes after frame", offset=body_start + length)
    try:
        obj = json.loads(body.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DecodeError(f"frame is not UTF-8: {exc}", offset=body_start + exc.start) from exc
    except json.JSONDecodeError as exc:
        raise DecodeError(f"bad JSON: {exc.msg}", offset=body_start + exc.pos) from exc
    return envelope_from_dict(obj, error_offset=body_start)


def envelope_from_dict(obj: object, error_offset: int = 0) -> Envelope:
    if not isinstance(obj, dict):
        raise DecodeError("envelope must be an object", offset=error_offset)
    env_type = obj.get("type")
    if not isinstance(env_type, str):
        raise DecodeError("envelope type must be a string", offset=error_offset)
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise DecodeError("payload must be an object", offset=error_offset)
    trial_id = obj.get("trialId")
    actor_id = obj.get("actorId")
    server_seq = obj.get("serverSeq")
    if trial_id is not None and not isinstance(trial_id, str):
        raise DecodeError("trialId must be a string", offset=error_offset)
    if actor_id is not None and not isinstance(actor_id, str):
        raise DecodeError("actorId must be a string", offset=error_offset)
    if server_seq is not None and not isinstance(server_seq, int):
        raise DecodeError("serverSeq must be an integer", offset=error_offset)
    # unknown extra fields are deliberately ignored
    return Envelope(
        type=env_type,
        trial_id=trial_id,
        actor_id=actor_id,
        server_seq=server_seq,
        payload=payload,
    )


def decode_stream(buffer: bytes) -> tuple[list[Envelope], bytes]:
    """Split a byte stream into complete frames plus the unconsumed tail."""
    envelopes = []
    while True:
        newline = buffer.find(b"\n")
        if newline < 0:
            if len(buffer) > 20:  # a length prefix can't be this long
                raise DecodeError("frame has no length prefix", offset=len(buffer))
            return envelopes, buffer
        prefix = buffer[:newline]
        if not prefix.isdigit():
            raise DecodeError(f"bad length prefix {prefix!r}", offset=0)
        end = newline + 1 + int(prefix)
        if len(buffer) < end:
            return envelopes, buffer
        envelopes.append(decode(buffer[:end]))
        buffer = buffer[end:]
