/**
 * End-user microphone capture.
 *
 * In a real browser the capture path is the standard media API: get a stream
 * with `navigator.mediaDevices.getUserMedia({audio: true})`, pull PCM chunks
 * off an AudioWorklet, and ship each one as an AUDIO_CHUNK envelope. Tests
 * and headless runs use the text-injection microphone instead, which speaks
 * the same envelope but carries UTF-8 text the mock recognizer understands
 * (interim per chunk, a segment committed at every newline).
 */

import { ClientSession } from "./session.js";

export interface Microphone {
  /** Begin streaming chunks to the session. */
  start(): void;
  stop(): void;
}

/** Deterministic capture source for driving dictation from scripts. */
export class TextInjectionMicrophone implements Microphone {
  private session: ClientSession;
  private running = false;

  constructor(session: ClientSession) {
    this.session = session;
  }

  start(): void {
    this.running = true;
  }

  stop(): void {
    this.running = false;
  }

  /** Stream a partial utterance (produces an interim transcript). */
  sayPartial(text: string): void {
    this.ensureRunning();
    this.session.sendAudioText(text);
  }

  /** Finish the current utterance: the newline commits the segment. */
  say(text: string): void {
    this.ensureRunning();
    this.session.sendAudioText(`${text}\n`);
  }

  /** Close the stream, flushing any half-spoken segment as final. */
  finish(): void {
    this.ensureRunning();
    this.session.sendAudioText("", true);
    this.running = false;
  }

  private ensureRunning(): void {
    if (!this.running) throw new Error("microphone is stopped");
  }
}

/**
 * Placeholder for the browser capture path; constructing it outside a real
 * browser fails fast rather than pretending to record.
 */
export class BrowserMicrophone implements Microphone {
  constructor() {
    const nav = (globalThis as { navigator?: { mediaDevices?: unknown } }).navigator;
    if (nav?.mediaDevices === undefined) {
      throw new Error("browser media capture is unavailable in this environment");
    }
  }

  start(): void {
    throw new Error("browser capture wiring is not part of the headless build");
  }

  stop(): void {
    // nothing to stop
  }
}
