/**
 * Realtime client session: one websocket, one CRDT replica, and the mirrored
 * trial state every view renders from (mic, speaker, playback, boxes, labels,
 * annotations, presence, transcripts).
 *
 * Local edits apply to the replica immediately and ship as DOC_OP, so typing
 * never waits on the network; the server stays the ordering authority and its
 * broadcasts are applied in serverSeq order as they arrive. State handlers
 * are idempotent upserts, which makes the reconnect path safe: after a drop
 * the session redials, sends HELLO with its lastServerSeq, and the snapshot
 * plus gap replay simply converge the mirror.
 */

import {
  AFTER,
  Anchor,
  anchorFromWire,
  anchorToWire,
  BEFORE,
  Bias,
  Doc,
  opToWire,
} from "./crdt.js";
import * as protocol from "./protocol.js";
import { decodeFrame, encodeFrame, Envelope } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((event?: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface MicState {
  on: boolean;
  changedBy: string;
  changedAt: number;
}

export interface SpeakerState {
  active: boolean;
  boxId?: string;
  durationMs?: number;
}

export interface PlaybackState {
  active: boolean;
  progressIndex?: number;
  durationMs?: number;
}

export interface SpeechBox {
  boxId: string;
  kind: string; // EDITABLE | PRESET
  text: string;
}

export interface LabelDef {
  labelId: string;
  name: string;
  color: string;
  createdBy: string;
  stamp: number[];
}

export interface Annotation {
  annoId: string;
  kind: string; // LABEL | HIGHLIGHT | NOTE
  start: Record<string, unknown>;
  end: Record<string, unknown>;
  author: string;
  stamp: number[];
  labelId: string | null;
  category: string | null;
  noteText: string | null;
}

export interface Presence {
  actorId: string;
  displayName: string;
  color: string;
  seq: number;
  expiresAt: number;
  caret: Record<string, unknown> | null;
  selection: Record<string, unknown>[] | null;
  pointer: number[] | null;
}

export interface TranscriptLine {
  kind: string; // INTERIM | FINAL
  text: string;
  segmentId: number;
}

export interface TrialSummary {
  trialId: string;
  name: string;
  status: string;
}

export interface ErrorNotice {
  code: string;
  message: string;
}

export type ConnectionState = "connecting" | "open" | "reconnecting" | "closed";

export interface SessionOptions {
  url: string; // ws://host:port/ws
  token: string;
  trialId: string;
  displayName?: string;
  wizardRoleTag?: string;
  socketFactory: SocketFactory;
  /** Redial after an unexpected close, replaying from lastServerSeq. */
  autoReconnect?: boolean;
  reconnectDelayMs?: number;
}

export class ClientSession {
  readonly options: SessionOptions;

  connection: ConnectionState = "connecting";
  actorId = "";
  role = "";
  displayName = "";
  features: string[] = [];
  replica = -1;
  doc: Doc | null = null;
  trial: TrialSummary | null = null;
  lastServerSeq = 0;

  micState: MicState = { on: false, changedBy: "", changedAt: 0 };
  speakerState: SpeakerState = { active: false };
  playbackState: PlaybackState = { active: false };
  boxes = new Map<string, SpeechBox>();
  labels = new Map<string, LabelDef>();
  annotations = new Map<string, Annotation>();
  presence = new Map<string, Presence>();
  interim = new Map<number, TranscriptLine>();
  finals: TranscriptLine[] = [];
  errors: ErrorNotice[] = [];
  trialEvents: Record<string, unknown>[] = [];

  private socket: WebSocketLike | null = null;
  private closedByUser = false;
  private welcomed = false;
  private presenceSeq = 0;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private listeners = new Set<() => void>();

  constructor(options: SessionOptions) {
    this.options = options;
    this.dial(false);
  }

  hasFeature(name: string): boolean {
    return this.features.includes(name);
  }

  text(): string {
    return this.doc === null ? "" : this.doc.text();
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  /** Resolve once `predicate(this)` holds; reject after `timeoutMs`. */
  waitFor(predicate: (session: ClientSession) => boolean, timeoutMs = 5000): Promise<void> {
    if (predicate(this)) return Promise.resolve();
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => {
        unsubscribe();
        reject(new Error(`timed out after ${timeoutMs}ms waiting for session state`));
      }, timeoutMs);
      const unsubscribe = this.subscribe(() => {
        if (predicate(this)) {
          clearTimeout(timer);
          unsubscribe();
          resolve();
        }
      });
    });
  }

  close(): void {
    this.closedByUser = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.connection = "closed";
    this.socket?.close();
    this.emit();
  }

  // -- outbound actions ---------------------------------------------------

  insertText(index: number, text: string): void {
    const ops = this.mustDoc().localInsert(index, text);
    this.send(protocol.DOC_OP, { ops: ops.map(opToWire) });
  }

  deleteRange(index: number, length: number): void {
    const ops = this.mustDoc().localDelete(index, length);
    this.send(protocol.DOC_OP, { ops: ops.map(opToWire) });
  }

  setMic(on: boolean): void {
    this.send(protocol.MIC_SET, { on });
  }

  toggleMic(): void {
    this.setMic(!this.micState.on);
  }

  upsertBox(boxId: string, kind: string, text: string): void {
    this.send(protocol.SPEECH_BOX_UPSERT, { boxId, kind, text });
  }

  playBox(boxId: string): void {
    this.send(protocol.SPEECH_PLAY, { boxId });
  }

  togglePlayback(fromIndex?: number): void {
    const from =
      fromIndex === undefined
        ? null
        : anchorToWire(this.mustDoc().createAnchor(fromIndex, BEFORE));
    this.send(protocol.PLAYBACK_TOGGLE, { from });
  }

  defineLabel(name: string, color: string): void {
    this.send(protocol.LABEL_DEF, { name, color });
  }

  applyLabel(startIndex: number, endIndex: number, labelId: string): void {
    this.sendAnnotation("LABEL", startIndex, endIndex, { labelId });
  }

  addHighlight(startIndex: number, endIndex: number, category: string): void {
    this.sendAnnotation("HIGHLIGHT", startIndex, endIndex, { category });
  }

  addNote(startIndex: number, endIndex: number, noteText: string): void {
    this.sendAnnotation("NOTE", startIndex, endIndex, { noteText });
  }

  deleteNote(annoId: string): void {
    this.send(protocol.ANNOTATION_OP, { action: "DELETE", annoId });
  }

  sendAwareness(details: {
    caretIndex?: number;
    selection?: [number, number];
    pointer?: [number, number];
    color?: string;
  }): void {
    const doc = this.mustDoc();
    this.presenceSeq += 1;
    const payload: Record<string, unknown> = {
      displayName: this.displayName,
      color: details.color ?? "#1f6feb",
      seq: this.presenceSeq,
      caret:
        details.caretIndex === undefined
          ? null
          : anchorToWire(doc.createAnchor(details.caretIndex, BEFORE)),
      selection:
        details.selection === undefined
          ? null
          : [
              anchorToWire(doc.createAnchor(details.selection[0], BEFORE)),
              anchorToWire(doc.createAnchor(details.selection[1], BEFORE)),
            ],
      pointer: details.pointer === undefined ? null : [...details.pointer],
    };
    this.send(protocol.AWARENESS, payload);
  }

  /**
   * Test-mode audio capture: text stands in for microphone samples, matching
   * the mock recognizer's contract (interim per chunk, final on newline).
   */
  sendAudioText(text: string, final = false): void {
    this.send(protocol.AUDIO_CHUNK, { data: toBase64(text), final });
  }

  requestSync(): void {
    this.send(protocol.SYNC_REQUEST, { vv: this.doc?.versionVector() ?? {} });
  }

  /**
   * Editor shortcuts: Ctrl/Cmd+Q toggles the mic, Escape toggles content
   * playback from the caret. Returns true when the key was consumed.
   */
  handleKey(
    event: { key: string; ctrlKey?: boolean; metaKey?: boolean },
    caretIndex?: number,
  ): boolean {
    if ((event.ctrlKey || event.metaKey) && event.key.toLowerCase() === "q") {
      this.toggleMic();
      return true;
    }
    if (event.key === "Escape") {
      this.togglePlayback(caretIndex);
      return true;
    }
    return false;
  }

  createAnchorWire(index: number, bias: Bias = BEFORE): Record<string, unknown> {
    return anchorToWire(this.mustDoc().createAnchor(index, bias));
  }

  /** Visible carets of OTHER actors, resolved to document indexes. */
  remoteCarets(): { actorId: string; displayName: string; color: string; index: number }[] {
    const doc = this.doc;
    if (doc === null) return [];
    const out: { actorId: string; displayName: string; color: string; index: number }[] = [];
    for (const p of this.presence.values()) {
      if (p.actorId === this.actorId || p.caret === null) continue;
      let anchor: Anchor;
      try {
        anchor = anchorFromWire(p.caret);
      } catch {
        continue;
      }
      try {
        out.push({
          actorId: p.actorId,
          displayName: p.displayName,
          color: p.color,
          index: doc.resolveIndex(anchor),
        });
      } catch {
        // caret references an item this replica has not integrated yet
      }
    }
    out.sort((a, b) => a.index - b.index || a.actorId.localeCompare(b.actorId));
    return out;
  }

  /** Annotation ranges resolved against the current document. */
  resolvedAnnotations(): {
    annoId: string;
    kind: string;
    start: number;
    end: number;
    labelId: string | null;
    category: string | null;
    noteText: string | null;
    author: string;
  }[] {
    const doc = this.doc;
    if (doc === null) return [];
    const out = [];
    for (const anno of this.annotations.values()) {
      let start: number;
      let end: number;
      try {
        start = doc.resolveIndex(anchorFromWire(anno.start));
        end = doc.resolveIndex(anchorFromWire(anno.end));
      } catch {
        continue;
      }
      out.push({
        annoId: anno.annoId,
        kind: anno.kind,
        start,
        end,
        labelId: anno.labelId,
        category: anno.category,
        noteText: anno.noteText,
        author: anno.author,
      });
    }
    out.sort((a, b) => a.start - b.start || a.end - b.end || a.annoId.localeCompare(b.annoId));
    return out;
  }

  // -- wiring ----------------------------------------------------------------

  private mustDoc(): Doc {
    if (this.doc === null) throw new Error("session has no document yet (no WELCOME)");
    return this.doc;
  }

  private sendAnnotation(
    kind: string,
    startIndex: number,
    endIndex: number,
    extra: Record<string, unknown>,
  ): void {
    const doc = this.mustDoc();
    this.send(protocol.ANNOTATION_OP, {
      action: "ADD",
      kind,
      start: anchorToWire(doc.createAnchor(startIndex, BEFORE)),
      end: anchorToWire(doc.createAnchor(endIndex, endIndex > 0 ? AFTER : BEFORE)),
      ...extra,
    });
  }

  private send(type: string, payload: Record<string, unknown>): void {
    if (this.socket === null) throw new Error("session is not connected");
    const envelope: Envelope = { type, payload, trialId: this.options.trialId };
    this.socket.send(encodeFrame(envelope));
  }

  private dial(isReconnect: boolean): void {
    this.reconnectTimer = null;
    this.connection = isReconnect ? "reconnecting" : "connecting";
    const socket = this.options.socketFactory(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      const hello: Record<string, unknown> = {
        token: this.options.token,
        trialId: this.options.trialId,
      };
      if (this.options.displayName !== undefined) hello.displayName = this.options.displayName;
      if (this.options.wizardRoleTag !== undefined) {
        hello.wizardRoleTag = this.options.wizardRoleTag;
      }
      if (this.welcomed) hello.lastServerSeq = this.lastServerSeq;
      socket.send(encodeFrame({ type: protocol.HELLO, payload: hello }));
    };
    socket.onmessage = (event) => {
      const data = event.data;
      const raw =
        typeof data === "string"
          ? data
          : data instanceof Uint8Array
            ? data
            : new Uint8Array(data as ArrayBuffer);
      this.dispatch(decodeFrame(raw));
    };
    socket.onclose = () => {
      if (this.socket !== socket) return; // superseded by a newer dial
      this.socket = null;
      if (this.closedByUser) return;
      if (this.options.autoReconnect) {
        this.connection = "reconnecting";
        this.emit();
        this.reconnectTimer = setTimeout(
          () => this.dial(true),
          this.options.reconnectDelayMs ?? 1000,
        );
      } else {
        this.connection = "closed";
        this.emit();
      }
    };
  }

  private dispatch(env: Envelope): void {
    if (env.serverSeq !== undefined && env.serverSeq > this.lastServerSeq) {
      this.lastServerSeq = env.serverSeq;
    }
    switch (env.type) {
      case protocol.WELCOME:
        this.onWelcome(env.payload);
        break;
      case protocol.DOC_OP:
        this.doc?.applyRemote(env.payload.ops as unknown[]);
        break;
      case protocol.SYNC_RESPONSE:
        this.onSyncResponse(env.payload);
        break;
      case protocol.AWARENESS:
        this.onAwareness(env.payload);
        break;
      case protocol.MIC_STATE:
        this.micState = env.payload as unknown as MicState;
        break;
      case protocol.SPEECH_BOX_UPSERT: {
        const box = env.payload as unknown as SpeechBox;
        this.boxes.set(box.boxId, box);
        break;
      }
      case protocol.SPEAKER_STATE:
        this.speakerState = env.payload as unknown as SpeakerState;
        break;
      case protocol.PLAYBACK_TOGGLE: {
        const action = env.payload.action;
        this.playbackState =
          action === "START"
            ? { active: true, progressIndex: env.payload.fromIndex as number }
            : { active: false, progressIndex: env.payload.progressIndex as number | undefined };
        break;
      }
      case protocol.PLAYBACK_STATE:
        this.playbackState = env.payload as unknown as PlaybackState;
        break;
      case protocol.TRANSCRIPT_EVENT:
        this.onTranscript(env.payload as unknown as TranscriptLine);
        break;
      case protocol.LABEL_DEF: {
        const label = env.payload as unknown as LabelDef;
        this.labels.set(label.labelId, label);
        break;
      }
      case protocol.ANNOTATION_OP:
        this.onAnnotation(env.payload);
        break;
      case protocol.FEATURE_UPDATE:
        if (env.payload.actorId === this.actorId) {
          this.features = [...(env.payload.features as string[])];
        }
        break;
      case protocol.TRIAL_EVENT:
        this.trialEvents.push(env.payload);
        if (env.payload.event === "TRIAL_CLOSED" && this.trial !== null) {
          this.trial = { ...this.trial, status: "CLOSED" };
        }
        break;
      case protocol.ERROR:
        this.errors.push({
          code: String(env.payload.code ?? "UNKNOWN"),
          message: String(env.payload.message ?? ""),
        });
        break;
      default:
        break; // unknown broadcast types are ignored, same as unknown fields
    }
    this.emit();
  }

  private onWelcome(payload: Record<string, unknown>): void {
    this.actorId = payload.actorId as string;
    this.role = payload.role as string;
    this.displayName = payload.displayName as string;
    this.features = [...(payload.features as string[])];
    this.replica = payload.replica as number;
    this.doc = new Doc(this.replica);
    this.doc.applyRemote(payload.ops as unknown[]);
    this.micState = payload.micState as unknown as MicState;
    this.boxes = new Map(
      (payload.boxes as SpeechBox[]).map((box) => [box.boxId, box]),
    );
    this.labels = new Map(
      (payload.labels as LabelDef[]).map((label) => [label.labelId, label]),
    );
    this.annotations = new Map(
      (payload.annotations as Annotation[]).map((anno) => [anno.annoId, anno]),
    );
    this.presence = new Map(
      (payload.presence as Presence[]).map((p) => [p.actorId, p]),
    );
    this.trial = payload.trial as unknown as TrialSummary;
    this.lastServerSeq = payload.serverSeq as number;
    this.connection = "open";
    this.welcomed = true;
  }

  private onSyncResponse(payload: Record<string, unknown>): void {
    this.doc?.applyRemote(payload.ops as unknown[]);
    for (const label of payload.labelDefs as LabelDef[]) {
      this.labels.set(label.labelId, label);
    }
    this.annotations = new Map(
      (payload.annotations as Annotation[]).map((anno) => [anno.annoId, anno]),
    );
    this.micState = payload.micState as unknown as MicState;
    this.boxes = new Map(
      (payload.boxes as SpeechBox[]).map((box) => [box.boxId, box]),
    );
  }

  private onAwareness(payload: Record<string, unknown>): void {
    const actorId = payload.actorId as string;
    if (payload.gone === true) {
      this.presence.delete(actorId);
      return;
    }
    const next = payload as unknown as Presence;
    const current = this.presence.get(actorId);
    if (current === undefined || next.seq >= current.seq) {
      this.presence.set(actorId, next);
    }
  }

  private onAnnotation(payload: Record<string, unknown>): void {
    if (payload.action === "DELETE") {
      this.annotations.delete(payload.annoId as string);
      return;
    }
    const anno = payload.annotation as Annotation | undefined;
    if (anno !== undefined) this.annotations.set(anno.annoId, anno);
  }

  private onTranscript(line: TranscriptLine): void {
    if (line.kind === "FINAL") {
      this.interim.delete(line.segmentId);
      this.finals.push(line);
    } else {
      this.interim.set(line.segmentId, line);
    }
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }
}

function toBase64(text: string): string {
  const bytes = new TextEncoder().encode(text);
  if (typeof Buffer !== "undefined") {
    return Buffer.from(bytes).toString("base64");
  }
  let binary = "";
  for (const byte of bytes) binary += String.fromCharCode(byte);
  return btoa(binary);
}
