"""Connection hub: binds sockets to trial rooms and fans out state.

The hub is transport-agnostic: a connection is just a sink callable
that accepts outbound :class:`~wizundry.protocol.Envelope` objects.
The socket layer (or a test harness) feeds inbound envelopes to
:meth:`Hub.handle` and wires real writers to the sinks.

Every state change funnels through the owning trial's runtime, is
stamped with that trial's next ``serverSeq``, recorded for gap replay,
and delivered to exactly the connections the audience table allows.
Direct replies (WELCOME, SYNC_RESPONSE, ERROR) carry no ``serverSeq``
and are never replayed.
"""

from __future__ import annotations

import base64
import binascii
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import protocol
from .annotations import HIGHLIGHT, LABEL, NOTE, AnnotationStore, _anchor
from .auth import ADMIN, END_USER, WIZARD, Claims, verify_token
from .clock import Clock, SystemClock
from .crdt import Doc, new_doc
from .errors import (
    AuthFailed,
    BadSignature,
    DuplicateEndUser,
    ExpiredToken,
    FeatureDisabled,
    Forbidden,
    MalformedOp,
    MalformedToken,
    UnknownTrial,
    UnknownType,
    WizundryError,
)
from .eventlog import EventLog
from .presence import PresencePayload, PresenceState
from .protocol import Envelope
from .speech import MockTts, SpeechEngine, make_stt
from .speech.engine import SERVER_ACTOR
from .trials import TrialRegistry

SERVER_ROLE = "SERVER"


@dataclass
class Connection:
    """One live socket, as the hub sees it."""

    conn_id: int
    sink: Callable[[Envelope], None]
    auto_drain: bool = True
    open: bool = True
    trial_id: Optional[str] = None
    actor_id: Optional[str] = None
    role: Optional[str] = None
    features: frozenset = frozenset()
    replica: Optional[int] = None
    outbox: deque = field(default_factory=deque)

    @property
    def handshaken(self) -> bool:
        return self.actor_id is not None


@dataclass(frozen=True)
class _HistoryEntry:
    envelope: Envelope  # carries its serverSeq
    audience: str
    target: Optional[str] = None  # actor id for AUDIENCE_ACTOR


class TrialRuntime:
    """Everything one trial owns: document, annotations, presence,
    speech engine, event log, and the broadcast history."""

    def __init__(self, trial, log: EventLog, clock: Clock, stt, tts):
        self.trial = trial
        self.doc: Doc = new_doc(replica=0)  # the server's dictation writer
        self.store = AnnotationStore()
        self.presence = PresenceState()
        self.engine = SpeechEngine(doc=self.doc, stt=stt, tts=tts, clock=clock)
        self.log = log
        self.server_seq = 0
        self.history: list[_HistoryEntry] = []
        self._stamp_counter = 0

    def next_stamp(self) -> tuple[int, int]:
        """Server-minted stamp for labels/annotations: totally ordered,
        replica slot 0 like every other server-authored artifact."""
        self._stamp_counter += 1
        return (self._stamp_counter, 0)


class Hub:
    """All trials and connections of one server process."""

    def __init__(
        self,
        registry: Optional[TrialRegistry] = None,
        secret: str = "",
        data_dir: Optional[str] = None,
        clock: Optional[Clock] = None,
        stt_factory: Optional[Callable[[], object]] = None,
        tts_factory: Optional[Callable[[], object]] = None,
    ):
        self.registry = registry or TrialRegistry()
        self.secret = secret
        self.data_dir = data_dir
        self.clock = clock or SystemClock()
        self.stt_factory = stt_factory or (lambda: make_stt("mock"))
        self.tts_factory = tts_factory or MockTts
        self._runtimes: dict[str, TrialRuntime] = {}
        self._conns: dict[int, Connection] = {}
        self._next_conn_id = 1

    # -- connection lifecycle ------------------------------------------------

    def connect(self, sink: Callable[[Envelope], None], auto_drain: bool = True) -> Connection:
        conn = Connection(conn_id=self._next_conn_id, sink=sink, auto_drain=auto_drain)
        self._next_conn_id += 1
        self._conns[conn.conn_id] = conn
        return conn

    def disconnect(self, conn: Connection) -> None:
        if not conn.open:
            return
        conn.open = False
        self._conns.pop(conn.conn_id, None)
        if not conn.handshaken:
            return
        runtime = self._runtimes.get(conn.trial_id)
        if runtime is None:
            return
        runtime.log.append(conn.actor_id, conn.role, "LEAVE", {"actorId": conn.actor_id})
        if runtime.presence.drop(conn.actor_id):
            self._broadcast(
                runtime, protocol.AWARENESS,
                {"actorId": conn.actor_id, "gone": True}, SERVER_ACTOR,
            )

    def drain(self, conn: Connection) -> None:
        while conn.outbox and conn.open:
            conn.sink(conn.outbox.popleft())

    # -- inbound dispatch ------------------------------------------------------

    def handle(self, conn: Connection, envelope: Envelope) -> None:
        if not conn.open:
            return
        if envelope.type == protocol.HELLO:
            self._handshake(conn, envelope)
            return
        if not conn.handshaken:
            self._reject(conn, AuthFailed("handshake required"), envelope.type)
            self.disconnect(conn)
            return
        if envelope.type not in protocol.ENVELOPE_TYPES:
            self._reject(conn, UnknownType(f"unknown envelope type {envelope.type!r}"),
                         envelope.type)
            return
        allowed = protocol.SENDER_ROLES.get(envelope.type)
        if allowed is None or conn.role not in allowed:
            self._reject(
                conn,
                Forbidden(f"{conn.role} may not send {envelope.type}"),
                envelope.type,
            )
            return
        gate = self._feature_gate(envelope)
        if gate is not None and conn.role == WIZARD and gate not in conn.features:
            self._reject(
                conn,
                FeatureDisabled(f"{envelope.type} requires feature {gate}", feature=gate),
                envelope.type,
            )
            return
        runtime = self._runtimes[conn.trial_id]
        try:
            self._dispatch(runtime, conn, envelope)
        except WizundryError as exc:
            self._reject(conn, exc, envelope.type)

    @staticmethod
    def _feature_gate(envelope: Envelope) -> Optional[str]:
        if envelope.type == protocol.ANNOTATION_OP:
            if envelope.payload.get("action") == "DELETE":
                return protocol.ANNOTATION_KIND_GATES[NOTE]
            return protocol.ANNOTATION_KIND_GATES.get(envelope.payload.get("kind"))
        return protocol.WIZARD_FEATURE_GATES.get(envelope.type)

    def _dispatch(self, runtime: TrialRuntime, conn: Connection, env: Envelope) -> None:
        handler = {
            protocol.SYNC_REQUEST: self._on_sync_request,
            protocol.DOC_OP: self._on_doc_op,
            protocol.AWARENESS: self._on_awareness,
            protocol.MIC_SET: self._on_mic_set,
            protocol.AUDIO_CHUNK: self._on_audio_chunk,
            protocol.SPEECH_BOX_UPSERT: self._on_box_upsert,
            protocol.SPEECH_PLAY: self._on_speech_play,
            protocol.PLAYBACK_TOGGLE: self._on_playback_toggle,
            protocol.LABEL_DEF: self._on_label_def,
            protocol.ANNOTATION_OP: self._on_annotation_op,
        }[env.type]
        handler(runtime, conn, env.payload)

    # -- handshake ---------------------------------------------------------------

    def _handshake(self, conn: Connection, env: Envelope) -> None:
        if conn.handshaken:
            self._reject(conn, Forbidden("connection already handshaken"), protocol.HELLO)
            return
        payload = env.payload
        trial_id = payload.get("trialId") or env.trial_id
        try:
            claims = self._authenticate(payload.get("token"), trial_id)
            if any(
                c.open and c.trial_id == trial_id and c.role == END_USER
                for c in self._conns.values()
            ) and claims.role == END_USER:
                raise DuplicateEndUser("trial already has a live end-user connection",
                                       trial_id=trial_id)
            membership = self.registry.join(
                trial_id, claims,
                display_name=payload.get("displayName"),
                wizard_role_tag=payload.get("wizardRoleTag"),
            )
        except WizundryError as exc:
            self._reject(conn, exc, protocol.HELLO)
            self.disconnect(conn)
            return
        runtime = self._runtime(trial_id)
        trial = runtime.trial
        conn.trial_id = trial_id
        conn.actor_id = membership.actor_id
        conn.role = membership.role
        conn.features = trial.features_for(membership.actor_id, membership.role)
        conn.replica = trial.assign_replica()
        runtime.log.append(
            membership.actor_id, membership.role, "JOIN",
            {
                "actorId": membership.actor_id,
                "role": membership.role,
                "displayName": membership.display_name,
                "replica": conn.replica,
            },
        )
        now = self.clock.now_ms()
        welcome = {
            "actorId": membership.actor_id,
            "role": membership.role,
            "displayName": membership.display_name,
            "features": sorted(conn.features),
            "replica": conn.replica,
            "docVV": {str(r): c for r, c in runtime.doc.version_vector().items()},
            "ops": [op.to_dict() for op in runtime.doc.op_log()],
            "micState": runtime.engine.mic.to_dict(),
            "boxes": [b.to_dict() for b in sorted(runtime.engine.boxes.values(),
                                                  key=lambda b: b.box_id)],
            "labels": [d.to_dict() for d in sorted(runtime.store.labels.values(),
                                                   key=lambda d: d.label_id)],
            "annotations": [a.to_dict() for a in sorted(runtime.store.annotations.values(),
                                                        key=lambda a: a.anno_id)],
            "presence": (
                [p.to_dict() for p in runtime.presence.snapshot(now)]
                if membership.role in (WIZARD, ADMIN) else []
            ),
            "trial": {"trialId": trial.trial_id, "name": trial.name, "status": trial.status},
            "serverSeq": runtime.server_seq,
        }
        self._deliver(conn, Envelope(
            type=protocol.WELCOME, trial_id=trial_id,
            actor_id=membership.actor_id, payload=welcome,
        ))
        last_seen = payload.get("lastServerSeq")
        if isinstance(last_seen, int):
            for entry in runtime.history:
                if entry.envelope.server_seq > last_seen and self._visible(conn, entry):
                    self._deliver(conn, entry.envelope)
        self._broadcast(
            runtime, protocol.TRIAL_EVENT,
            {
                "event": "MEMBER_JOINED",
                "actorId": membership.actor_id,
                "role": membership.role,
                "displayName": membership.display_name,
            },
            membership.actor_id,
        )

    def _authenticate(self, token, trial_id) -> Claims:
        if not isinstance(token, str):
            raise AuthFailed("missing token")
        try:
            claims = verify_token(token, self.secret, now_ms=self.clock.now_ms())
        except (BadSignature, ExpiredToken, MalformedToken) as exc:
            raise AuthFailed(f"token rejected: {exc}") from exc
        if claims.trial_id is not None and claims.trial_id != trial_id:
            raise AuthFailed("token is scoped to a different trial")
        if not isinstance(trial_id, str) or not trial_id:
            raise UnknownTrial("no trialId in HELLO", trial_id=trial_id)
        return claims

    # -- per-type handlers ----------------------------------------------------

    def _on_sync_request(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        raw_vv = payload.get("vv") or {}
        try:
            vv = {int(k): int(v) for k, v in raw_vv.items()}
        except (TypeError, ValueError) as exc:
            raise MalformedOp(f"bad version vector: {exc}") from exc
        self._deliver(conn, Envelope(
            type=protocol.SYNC_RESPONSE, trial_id=conn.trial_id, actor_id=conn.actor_id,
            payload={
                "ops": [op.to_dict() for op in runtime.doc.ops_since(vv)],
                "labelDefs": [d.to_dict() for d in sorted(runtime.store.labels.values(),
                                                          key=lambda d: d.label_id)],
                "annotations": [a.to_dict() for a in
                                sorted(runtime.store.annotations.values(),
                                       key=lambda a: a.anno_id)],
                "micState": runtime.engine.mic.to_dict(),
                "boxes": [b.to_dict() for b in sorted(runtime.engine.boxes.values(),
                                                      key=lambda b: b.box_id)],
            },
        ))

    def _on_doc_op(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        ops = payload.get("ops")
        if not isinstance(ops, list):
            raise MalformedOp("DOC_OP payload needs an ops list")
        before = len(runtime.doc.op_log())
        report = runtime.doc.apply_remote(ops)
        applied = runtime.doc.op_log()[before:]
        if applied:
            self._broadcast(
                runtime, protocol.DOC_OP,
                {"ops": [op.to_dict() for op in applied]}, conn.actor_id,
            )
            self._log_doc_ops(runtime, conn.actor_id, conn.role, applied)
        if report.malformed:
            raise MalformedOp(f"{report.malformed} op(s) rejected")

    def _log_doc_ops(self, runtime: TrialRuntime, actor_id: str, role: str, applied) -> None:
        """One log row per homogeneous run of applied ops."""
        from .crdt import BEFORE, DELETE, INSERT, MARK, Anchor

        run: list = []

        def flush() -> None:
            if not run:
                return
            kind = run[0].kind
            wire = [op.to_dict() for op in run]
            if kind == INSERT:
                index = runtime.doc.resolve_index(Anchor(run[0].id, BEFORE))
                runtime.log.append(actor_id, role, "DOC_INSERT",
                                   {"index": index, "length": len(run), "ops": wire})
            elif kind == DELETE:
                index = runtime.doc.resolve_index(Anchor(run[0].target, BEFORE))
                runtime.log.append(actor_id, role, "DOC_DELETE",
                                   {"index": index, "length": len(run), "ops": wire})
            else:
                runtime.log.append(actor_id, role, "DOC_MARK",
                                   {"key": run[0].span.key, "value": run[0].span.value,
                                    "ops": wire})
            run.clear()

        for op in applied:
            if run and (run[0].kind != op.kind or op.kind == MARK):
                flush()
            run.append(op)
        flush()

    def _on_awareness(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        # expiresAt is server-assigned; the sender's actor id is never trusted
        presence = PresencePayload.from_dict(
            {"expiresAt": 0, **payload, "actorId": conn.actor_id}
        )
        if runtime.presence.update(presence, self.clock.now_ms()):
            stored = runtime.presence.snapshot(self.clock.now_ms())
            live = next(p for p in stored if p.actor_id == conn.actor_id)
            self._broadcast(runtime, protocol.AWARENESS, live.to_dict(), conn.actor_id)
        # stale seq: silently dropped

    def _on_mic_set(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        self._emit_effects(runtime, runtime.engine.set_mic(conn.actor_id, bool(payload.get("on"))))

    def _on_audio_chunk(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        try:
            data = base64.b64decode(payload.get("data", ""), validate=True)
        except (binascii.Error, TypeError) as exc:
            raise MalformedOp(f"bad audio chunk: {exc}") from exc
        effects = runtime.engine.ingest_audio(conn.actor_id, data)
        if payload.get("final"):
            effects = effects + runtime.engine.flush_dictation(conn.actor_id)
        self._emit_effects(runtime, effects)

    def _on_box_upsert(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        try:
            box_id = str(payload["boxId"])
            kind = str(payload["kind"])
            text = str(payload.get("text", ""))
        except KeyError as exc:
            raise MalformedOp(f"box upsert missing {exc}") from exc
        self._emit_effects(runtime, runtime.engine.upsert_box(conn.actor_id, box_id, kind, text))

    def _on_speech_play(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        box_id = payload.get("boxId")
        if not isinstance(box_id, str):
            raise MalformedOp("SPEECH_PLAY needs a boxId")
        self._emit_effects(runtime, runtime.engine.play_box(conn.actor_id, box_id))

    def _on_playback_toggle(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        raw = payload.get("from")
        anchor = None if raw is None else _anchor(raw)
        self._emit_effects(runtime, runtime.engine.toggle_playback(conn.actor_id, anchor))

    def _on_label_def(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        name = payload.get("name")
        color = payload.get("color")
        if not isinstance(name, str) or not isinstance(color, str):
            raise MalformedOp("label definition needs name and color")
        label = runtime.store.define_label(
            name, color, created_by=conn.actor_id, stamp=runtime.next_stamp(),
        )
        self._broadcast(runtime, protocol.LABEL_DEF, label.to_dict(), conn.actor_id)
        runtime.log.append(conn.actor_id, conn.role, "LABEL_DEF", label.to_dict())

    def _on_annotation_op(self, runtime: TrialRuntime, conn: Connection, payload: dict) -> None:
        action = payload.get("action")
        if action == "DELETE":
            anno_id = payload.get("annoId")
            if not isinstance(anno_id, str):
                raise MalformedOp("DELETE needs an annoId")
            runtime.store.delete_note(anno_id)
            self._broadcast(runtime, protocol.ANNOTATION_OP,
                            {"action": "DELETE", "annoId": anno_id}, conn.actor_id)
            runtime.log.append(conn.actor_id, conn.role, "ANNOTATION_DELETE",
                               {"annoId": anno_id})
            return
        if action != "ADD":
            raise MalformedOp(f"unknown annotation action {action!r}")
        kind = payload.get("kind")
        try:
            start = _anchor(payload["start"])
            end = _anchor(payload["end"])
        except (KeyError, TypeError) as exc:
            raise MalformedOp(f"bad annotation range: {exc}") from exc
        stamp = runtime.next_stamp()
        doc = runtime.doc
        marks_before = len(doc.op_log())
        if kind == LABEL:
            anno = runtime.store.apply_label(
                doc, start, end, str(payload.get("labelId")), conn.actor_id, stamp)
        elif kind == HIGHLIGHT:
            anno = runtime.store.add_highlight(
                doc, start, end, str(payload.get("category")), conn.actor_id, stamp)
        elif kind == NOTE:
            anno = runtime.store.add_note(
                doc, start, end, str(payload.get("noteText", "")), conn.actor_id, stamp)
        else:
            raise MalformedOp(f"unknown annotation kind {kind!r}")
        mark_ops = doc.op_log()[marks_before:]
        if mark_ops:  # a highlight also lands in the document's mark store
            self._broadcast(runtime, protocol.DOC_OP,
                            {"ops": [op.to_dict() for op in mark_ops]}, conn.actor_id)
            self._log_doc_ops(runtime, conn.actor_id, conn.role, mark_ops)
        self._broadcast(runtime, protocol.ANNOTATION_OP,
                        {"action": "ADD", "annotation": anno.to_dict()}, conn.actor_id)
        runtime.log.append(conn.actor_id, conn.role, "ANNOTATION_ADD", anno.to_dict())

    # -- admin operations (HTTP surface calls these) ---------------------------

    def create_trial(self, claims: Claims, name: str,
                     feature_assignments=None, trial_id=None):
        trial = self.registry.create_trial(
            claims, name, feature_assignments,
            now_ms=self.clock.now_ms(), trial_id=trial_id,
        )
        runtime = self._runtime(trial.trial_id)
        return runtime.trial

    def delete_trial(self, claims: Claims, trial_id: str):
        trial = self.registry.delete_trial(claims, trial_id)
        runtime = self._runtimes.get(trial_id)
        if runtime is not None:
            self._broadcast(runtime, protocol.TRIAL_EVENT,
                            {"event": "TRIAL_CLOSED"}, claims.user_id)
            runtime.log.append(claims.user_id, claims.role, "TRIAL_CLOSE", {})
            for conn in [c for c in self._conns.values() if c.trial_id == trial_id]:
                self.disconnect(conn)
        return trial

    def assign_features(self, claims: Claims, trial_id: str, actor_id: str, features):
        closed = self.registry.assign_features(claims, trial_id, actor_id, features)
        runtime = self._runtime(trial_id)
        runtime.log.append(claims.user_id, claims.role, "FEATURE_UPDATE",
                           {"actorId": actor_id, "features": sorted(closed)})
        for conn in self._conns.values():
            if conn.trial_id == trial_id and conn.actor_id == actor_id:
                conn.features = closed
        self._broadcast(
            runtime, protocol.FEATURE_UPDATE,
            {"actorId": actor_id, "features": sorted(closed)},
            claims.user_id, target=actor_id,
        )
        return closed

    def runtime_for(self, trial_id: str) -> TrialRuntime:
        runtime = self._runtimes.get(trial_id)
        if runtime is None:
            self.registry.get(trial_id)  # raises UnknownTrial
            runtime = self._runtime(trial_id)
        return runtime

    # -- periodic work -----------------------------------------------------------

    def tick(self, now_ms: Optional[int] = None) -> None:
        """Advance speech schedules and expire stale presence."""
        now = self.clock.now_ms() if now_ms is None else now_ms
        for runtime in self._runtimes.values():
            self._emit_effects(runtime, runtime.engine.tick(now))
            for actor_id in runtime.presence.expire(now):
                self._broadcast(runtime, protocol.AWARENESS,
                                {"actorId": actor_id, "gone": True}, SERVER_ACTOR)

    # -- internals ------------------------------------------------------------------

    def _runtime(self, trial_id: str) -> TrialRuntime:
        runtime = self._runtimes.get(trial_id)
        if runtime is None:
            trial = self.registry.get(trial_id)
            log = EventLog(trial_id, data_dir=self.data_dir, clock=self.clock)
            runtime = TrialRuntime(
                trial, log, self.clock, self.stt_factory(), self.tts_factory(),
            )
            self._runtimes[trial_id] = runtime
            if not log.events():
                log.append(SERVER_ACTOR, SERVER_ROLE, "TRIAL_OPEN", {"name": trial.name})
        return runtime

    def _role_of(self, runtime: TrialRuntime, actor_id: str) -> str:
        member = runtime.trial.members.get(actor_id)
        return member.role if member is not None else SERVER_ROLE

    def _emit_effects(self, runtime: TrialRuntime, effects) -> None:
        for effect in effects:
            self._broadcast(runtime, effect.type, effect.payload, effect.actor_id)
            if effect.log_event is not None:
                event_type, payload = effect.log_event
                runtime.log.append(
                    effect.actor_id, self._role_of(runtime, effect.actor_id),
                    event_type, payload,
                )

    def _broadcast(self, runtime: TrialRuntime, env_type: str, payload: dict,
                   actor_id: str, target: Optional[str] = None) -> None:
        audience = protocol.BROADCAST_AUDIENCE[env_type]
        if audience in (protocol.AUDIENCE_SENDER, protocol.AUDIENCE_NONE):
            return
        runtime.server_seq += 1
        envelope = Envelope(
            type=env_type, trial_id=runtime.trial.trial_id, actor_id=actor_id,
            server_seq=runtime.server_seq, payload=payload,
        )
        entry = _HistoryEntry(envelope=envelope, audience=audience, target=target)
        runtime.history.append(entry)
        for conn in list(self._conns.values()):
            if conn.trial_id == runtime.trial.trial_id and self._visible(conn, entry):
                self._deliver(conn, envelope)

    @staticmethod
    def _visible(conn: Connection, entry: _HistoryEntry) -> bool:
        if not conn.handshaken:
            return False
        if entry.audience == protocol.AUDIENCE_ALL:
            return True
        if entry.audience == protocol.AUDIENCE_WIZARDS_ADMIN:
            return conn.role in (WIZARD, ADMIN)
        if entry.audience == protocol.AUDIENCE_ACTOR:
            return conn.actor_id == entry.target
        return False

    def _deliver(self, conn: Connection, envelope: Envelope) -> None:
        if not conn.open:
            return
        conn.outbox.append(envelope)
        if len(conn.outbox) > protocol.OUTBOX_LIMIT:
            conn.outbox.clear()
            conn.sink(Envelope(
                type=protocol.ERROR, trial_id=conn.trial_id, actor_id=conn.actor_id,
                payload={"code": "SLOW_CONSUMER",
                         "message": f"outbox exceeded {protocol.OUTBOX_LIMIT} envelopes"},
            ))
            self.disconnect(conn)
            return
        if conn.auto_drain:
            self.drain(conn)

    def _reject(self, conn: Connection, error: WizundryError,
                in_reply_to: str, code: Optional[str] = None) -> None:
        payload = {
            "code": code or error.code,
            "message": str(error),
            "inReplyTo": in_reply_to,
        }
        self._deliver(conn, Envelope(
            type=protocol.ERROR, trial_id=conn.trial_id,
            actor_id=conn.actor_id, payload=payload,
        ))
        if conn.handshaken:
            runtime = self._runtimes.get(conn.trial_id)
            if runtime is not None:
                runtime.log.append(conn.actor_id, conn.role, "ERROR", payload)
