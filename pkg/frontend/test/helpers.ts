import { decodeFrame, encodeFrame, Envelope } from "../src/protocol.js";
import { ClientSession, SessionOptions, WebSocketLike } from "../src/session.js";

/** In-memory socket: captures outbound frames, lets tests push inbound ones. */
export class FakeSocket implements WebSocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  sentFrames: string[] = [];
  closed = false;

  send(data: string): void {
    this.sentFrames.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  receive(envelope: Envelope): void {
    this.onmessage?.({ data: encodeFrame(envelope) });
  }

  /** Decoded outbound envelopes, oldest first. */
  sent(): Envelope[] {
    return this.sentFrames.map((frame) => decodeFrame(frame));
  }

  sentOfType(type: string): Envelope[] {
    return this.sent().filter((env) => env.type === type);
  }

  lastSent(): Envelope {
    if (this.sentFrames.length === 0) throw new Error("nothing was sent");
    return decodeFrame(this.sentFrames[this.sentFrames.length - 1]);
  }

  dropConnection(): void {
    this.onclose?.();
  }
}

export interface HarnessOptions {
  features?: string[];
  role?: string;
  displayName?: string;
  session?: Partial<SessionOptions>;
}

export interface Harness {
  session: ClientSession;
  socket: FakeSocket;
  sockets: FakeSocket[]; // one per dial, for reconnect tests
}

export const DEFAULT_FEATURES = [
  "COLLAB_EDITOR",
  "MIC_CONTROL",
  "SPEECH_BOXES",
  "CONTENT_PLAYBACK",
  "LINE_BREAK",
  "PRESENCE_CURSORS",
  "LABELS",
  "HIGHLIGHTS",
  "SUMMARY_NOTES",
  "BUBBLE_MENU",
];

export function welcomePayload(options: HarnessOptions = {}): Record<string, unknown> {
  return {
    actorId: "w1",
    role: options.role ?? "WIZARD",
    displayName: options.displayName ?? "Daisy",
    features: options.features ?? DEFAULT_FEATURES,
    replica: 1,
    docVV: {},
    ops: [],
    micState: { on: false, changedBy: "", changedAt: 0 },
    boxes: [],
    labels: [],
    annotations: [],
    presence: [],
    trial: { trialId: "t-1", name: "Session A", status: "RUNNING" },
    serverSeq: 0,
  };
}

/** A session welcomed over a fake socket, ready for scripted envelopes. */
export function connectedSession(options: HarnessOptions = {}): Harness {
  const sockets: FakeSocket[] = [];
  const session = new ClientSession({
    url: "ws://test.invalid/ws",
    token: "tok",
    trialId: "t-1",
    displayName: options.displayName ?? "Daisy",
    socketFactory: () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    ...options.session,
  });
  const socket = sockets[0];
  socket.open();
  socket.receive({
    type: "WELCOME",
    trialId: "t-1",
    payload: welcomePayload(options),
  });
  return { session, socket, sockets };
}

/** Feed a server-style DOC_OP carrying ops authored by another replica. */
export function remoteInsert(
  harness: Harness,
  atSeq: number,
  ops: Record<string, unknown>[],
): void {
  harness.socket.receive({
    type: "DOC_OP",
    trialId: "t-1",
    actorId: "w2",
    serverSeq: atSeq,
    payload: { ops },
  });
}
