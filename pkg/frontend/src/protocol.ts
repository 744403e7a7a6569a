/**
 * Framed envelope codec.
 *
 * A frame is `<byte-length>\n<body>` where the prefix is the ASCII decimal
 * number of UTF-8 bytes in the JSON body. Bodies are canonical JSON: object
 * keys sorted, no added whitespace, non-ASCII sent raw. The same framing is
 * used on byte streams and inside WebSocket text messages, so this codec is
 * the only parser a client needs.
 */

export const HELLO = "HELLO";
export const WELCOME = "WELCOME";
export const SYNC_REQUEST = "SYNC_REQUEST";
export const SYNC_RESPONSE = "SYNC_RESPONSE";
export const DOC_OP = "DOC_OP";
export const AWARENESS = "AWARENESS";
export const MIC_SET = "MIC_SET";
export const MIC_STATE = "MIC_STATE";
export const SPEECH_BOX_UPSERT = "SPEECH_BOX_UPSERT";
export const SPEECH_PLAY = "SPEECH_PLAY";
export const SPEAKER_STATE = "SPEAKER_STATE";
export const PLAYBACK_TOGGLE = "PLAYBACK_TOGGLE";
export const PLAYBACK_STATE = "PLAYBACK_STATE";
export const AUDIO_CHUNK = "AUDIO_CHUNK";
export const TRANSCRIPT_EVENT = "TRANSCRIPT_EVENT";
export const LABEL_DEF = "LABEL_DEF";
export const ANNOTATION_OP = "ANNOTATION_OP";
export const FEATURE_UPDATE = "FEATURE_UPDATE";
export const TRIAL_EVENT = "TRIAL_EVENT";
export const ERROR = "ERROR";

export interface Envelope {
  type: string;
  payload: Record<string, unknown>;
  trialId?: string;
  actorId?: string;
  serverSeq?: number;
}

export class DecodeError extends Error {
  readonly offset: number;

  constructor(message: string, offset: number) {
    super(message);
    this.name = "DecodeError";
    this.offset = offset;
  }
}

const utf8 = new TextEncoder();
const utf8Decode = new TextDecoder("utf-8", { fatal: true });

/**
 * JSON with object keys sorted (by code point) at every level, `", "` and
 * `": "` separators, and non-ASCII kept raw — byte-identical to the frames
 * the server emits, so tests can compare encodings across implementations.
 */
export function canonicalJson(value: unknown): string {
  return serialize(value);
}

function serialize(value: unknown): string {
  if (value === null || value === undefined) return "null";
  switch (typeof value) {
    case "string":
    case "boolean":
      return JSON.stringify(value);
    case "number":
      if (!Number.isFinite(value)) {
        throw new TypeError(`cannot encode non-finite number ${value}`);
      }
      return JSON.stringify(value);
    case "object":
      break;
    default:
      throw new TypeError(`cannot encode a ${typeof value}`);
  }
  if (Array.isArray(value)) {
    return `[${value.map(serialize).join(", ")}]`;
  }
  const record = value as Record<string, unknown>;
  const keys = Object.keys(record)
    .filter((key) => record[key] !== undefined)
    .sort(compareCodePoints);
  const parts = keys.map((key) => `${JSON.stringify(key)}: ${serialize(record[key])}`);
  return `{${parts.join(", ")}}`;
}

/** UTF-16 default sort order diverges from code-point order past the BMP. */
function compareCodePoints(a: string, b: string): number {
  const aa = Array.from(a);
  const bb = Array.from(b);
  const n = Math.min(aa.length, bb.length);
  for (let i = 0; i < n; i += 1) {
    const diff = (aa[i].codePointAt(0) as number) - (bb[i].codePointAt(0) as number);
    if (diff !== 0) return diff;
  }
  return aa.length - bb.length;
}

function envelopeBody(envelope: Envelope): Record<string, unknown> {
  const body: Record<string, unknown> = {
    type: envelope.type,
    payload: envelope.payload ?? {},
  };
  if (envelope.trialId !== undefined) body.trialId = envelope.trialId;
  if (envelope.actorId !== undefined) body.actorId = envelope.actorId;
  if (envelope.serverSeq !== undefined) body.serverSeq = envelope.serverSeq;
  return body;
}

/** Encode one envelope to a complete frame (as a string; UTF-8 safe). */
export function encodeFrame(envelope: Envelope): string {
  const body = canonicalJson(envelopeBody(envelope));
  return `${utf8.encode(body).length}\n${body}`;
}

export function encodeFrameBytes(envelope: Envelope): Uint8Array {
  return utf8.encode(encodeFrame(envelope));
}

export function envelopeFromObject(obj: unknown, errorOffset = 0): Envelope {
  if (obj === null || typeof obj !== "object" || Array.isArray(obj)) {
    throw new DecodeError("envelope body must be an object", errorOffset);
  }
  const raw = obj as Record<string, unknown>;
  if (typeof raw.type !== "string") {
    throw new DecodeError("envelope needs a string type", errorOffset);
  }
  const payload = raw.payload ?? {};
  if (payload === null || typeof payload !== "object" || Array.isArray(payload)) {
    throw new DecodeError("payload must be an object", errorOffset);
  }
  const envelope: Envelope = {
    type: raw.type,
    payload: payload as Record<string, unknown>,
  };
  if (raw.trialId !== undefined && raw.trialId !== null) {
    if (typeof raw.trialId !== "string") throw new DecodeError("trialId must be a string", errorOffset);
    envelope.trialId = raw.trialId;
  }
  if (raw.actorId !== undefined && raw.actorId !== null) {
    if (typeof raw.actorId !== "string") throw new DecodeError("actorId must be a string", errorOffset);
    envelope.actorId = raw.actorId;
  }
  if (raw.serverSeq !== undefined && raw.serverSeq !== null) {
    if (typeof raw.serverSeq !== "number" || !Number.isInteger(raw.serverSeq)) {
      throw new DecodeError("serverSeq must be an integer", errorOffset);
    }
    envelope.serverSeq = raw.serverSeq;
  }
  return envelope; // unknown fields are deliberately ignored
}

/** Decode exactly one frame (with nothing after it). */
export function decodeFrame(data: Uint8Array | string): Envelope {
  const bytes = typeof data === "string" ? utf8.encode(data) : data;
  const newline = bytes.indexOf(0x0a);
  if (newline < 0) {
    throw new DecodeError("frame has no length prefix", bytes.length);
  }
  const prefix = asciiSlice(bytes, 0, newline);
  if (!/^[0-9]+$/.test(prefix)) {
    throw new DecodeError(`bad length prefix ${JSON.stringify(prefix)}`, 0);
  }
  const length = parseInt(prefix, 10);
  const bodyStart = newline + 1;
  if (bytes.length - bodyStart < length) {
    throw new DecodeError("frame truncated", bytes.length);
  }
  if (bytes.length - bodyStart > length) {
    throw new DecodeError("trailing bytes after frame", bodyStart + length);
  }
  return decodeBody(bytes.subarray(bodyStart, bodyStart + length), bodyStart);
}

function decodeBody(body: Uint8Array, bodyStart: number): Envelope {
  const bad = firstInvalidUtf8(body);
  if (bad >= 0) {
    throw new DecodeError("frame is not UTF-8", bodyStart + bad);
  }
  const text = utf8Decode.decode(body);
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    const match = /at position (\d+)/.exec((err as Error).message ?? "");
    const pos = match === null ? 0 : parseInt(match[1], 10);
    throw new DecodeError(`bad JSON: ${(err as Error).message}`, bodyStart + pos);
  }
  return envelopeFromObject(obj, bodyStart);
}

/** Index of the first malformed UTF-8 sequence's lead byte, or -1. */
function firstInvalidUtf8(bytes: Uint8Array): number {
  let i = 0;
  while (i < bytes.length) {
    const lead = bytes[i];
    if (lead < 0x80) {
      i += 1;
      continue;
    }
    let need: number;
    let min: number;
    let cp: number;
    if ((lead & 0xe0) === 0xc0) {
      need = 1;
      min = 0x80;
      cp = lead & 0x1f;
    } else if ((lead & 0xf0) === 0xe0) {
      need = 2;
      min = 0x800;
      cp = lead & 0x0f;
    } else if ((lead & 0xf8) === 0xf0) {
      need = 3;
      min = 0x10000;
      cp = lead & 0x07;
    } else {
      return i; // bare continuation byte or 0xF8+ lead
    }
    if (i + need >= bytes.length) return i;
    for (let k = 1; k <= need; k += 1) {
      const cont = bytes[i + k];
      if ((cont & 0xc0) !== 0x80) return i;
      cp = (cp << 6) | (cont & 0x3f);
    }
    if (cp < min || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return i;
    i += need + 1;
  }
  return -1;
}

const MAX_PREFIX_DIGITS = 20;

/**
 * Pull every complete frame off the front of a byte buffer.
 * Returns the decoded envelopes and the unconsumed tail.
 */
export function decodeStream(buffer: Uint8Array): [Envelope[], Uint8Array] {
  const envelopes: Envelope[] = [];
  let rest = buffer;
  for (;;) {
    const newline = rest.indexOf(0x0a);
    if (newline < 0) {
      if (rest.length > MAX_PREFIX_DIGITS) {
        throw new DecodeError("frame has no length prefix", rest.length);
      }
      return [envelopes, rest];
    }
    const prefix = asciiSlice(rest, 0, newline);
    if (!/^[0-9]+$/.test(prefix)) {
      throw new DecodeError(`bad length prefix ${JSON.stringify(prefix)}`, 0);
    }
    const end = newline + 1 + parseInt(prefix, 10);
    if (rest.length < end) {
      return [envelopes, rest];
    }
    envelopes.push(decodeFrame(rest.subarray(0, end)));
    rest = rest.subarray(end);
  }
}

function asciiSlice(bytes: Uint8Array, start: number, end: number): string {
  let out = "";
  for (let i = start; i < end; i += 1) out += String.fromCharCode(bytes[i]);
  return out;
}
