/**
 * Plain-text renderers for the three role screens. Each one is a pure
 * function of session state, so tests can snapshot exactly what a role is
 * shown — in particular that an affordance disappears entirely when its
 * feature is absent, and that the end-user screen never carries presence.
 */

import { ClientSession } from "./session.js";
import { TrialInfo } from "./client.js";

export const COLLAB_EDITOR = "COLLAB_EDITOR";
export const MIC_CONTROL = "MIC_CONTROL";
export const SPEECH_BOXES = "SPEECH_BOXES";
export const CONTENT_PLAYBACK = "CONTENT_PLAYBACK";
export const LINE_BREAK = "LINE_BREAK";
export const PRESENCE_CURSORS = "PRESENCE_CURSORS";
export const LABELS = "LABELS";
export const HIGHLIGHTS = "HIGHLIGHTS";
export const SUMMARY_NOTES = "SUMMARY_NOTES";
export const BUBBLE_MENU = "BUBBLE_MENU";

export const ALL_FEATURES = [
  COLLAB_EDITOR,
  MIC_CONTROL,
  SPEECH_BOXES,
  CONTENT_PLAYBACK,
  LINE_BREAK,
  PRESENCE_CURSORS,
  LABELS,
  HIGHLIGHTS,
  SUMMARY_NOTES,
  BUBBLE_MENU,
] as const;

export interface BubbleMenuAction {
  action: string; // HIGHLIGHT | LABEL | NOTE
  label: string;
}

/**
 * Actions offered when a wizard selects text. The menu itself needs
 * BUBBLE_MENU; each entry additionally needs its own feature.
 */
export function bubbleMenuActions(session: ClientSession): BubbleMenuAction[] {
  if (!session.hasFeature(BUBBLE_MENU)) return [];
  const actions: BubbleMenuAction[] = [];
  if (session.hasFeature(HIGHLIGHTS)) {
    actions.push({ action: "HIGHLIGHT", label: "Highlight selection" });
  }
  if (session.hasFeature(LABELS)) {
    actions.push({ action: "LABEL", label: "Attach label" });
  }
  if (session.hasFeature(SUMMARY_NOTES)) {
    actions.push({ action: "NOTE", label: "Add note" });
  }
  return actions;
}

interface Insertion {
  index: number;
  rank: number; // at equal index: close markers < carets < open markers
  text: string;
}

/** Document text with inline markers spliced in at code-point indexes. */
function decorate(text: string, insertions: Insertion[]): string {
  const chars = Array.from(text);
  const ordered = [...insertions].sort(
    (a, b) => b.index - a.index || b.rank - a.rank,
  );
  for (const ins of ordered) {
    chars.splice(Math.min(ins.index, chars.length), 0, ins.text);
  }
  return chars.join("");
}

function lineStartOf(text: string, index: number): number {
  const chars = Array.from(text);
  let start = 0;
  for (let i = 0; i < index && i < chars.length; i += 1) {
    if (chars[i] === "\n") start = i + 1;
  }
  return start;
}

/**
 * Shared transcript rendering: highlights wrapped in «…», label names at the
 * head of the line their range starts on, and (for wizards with cursors) the
 * other operators' name flags at their caret positions.
 */
function renderTranscript(session: ClientSession, withPresence: boolean): string {
  const text = session.text();
  const insertions: Insertion[] = [];
  const labelPrefixes = new Map<number, string[]>();

  for (const anno of session.resolvedAnnotations()) {
    if (anno.kind === "HIGHLIGHT") {
      insertions.push({ index: anno.start, rank: 2, text: "«" });
      insertions.push({ index: anno.end, rank: 0, text: "»" });
    } else if (anno.kind === "LABEL") {
      const name = anno.labelId === null
        ? null
        : session.labels.get(anno.labelId)?.name;
      const head = lineStartOf(text, anno.start);
      const bucket = labelPrefixes.get(head) ?? [];
      bucket.push(`[${name ?? anno.labelId ?? "?"}] `);
      labelPrefixes.set(head, bucket);
    }
  }
  for (const [head, prefixes] of labelPrefixes) {
    insertions.push({ index: head, rank: 2, text: prefixes.join("") });
  }
  if (withPresence) {
    for (const caret of session.remoteCarets()) {
      insertions.push({ index: caret.index, rank: 1, text: `⟦${caret.displayName}⟧` });
    }
  }
  return decorate(text, insertions);
}

function renderNotes(session: ClientSession): string[] {
  const lines: string[] = [];
  for (const anno of session.resolvedAnnotations()) {
    if (anno.kind === "NOTE") {
      lines.push(
        `  • [${anno.start},${anno.end}) ${anno.author}: ${anno.noteText ?? ""}` +
          `  (${anno.annoId})`,
      );
    }
  }
  return lines;
}

function renderErrors(session: ClientSession): string[] {
  return session.errors.slice(-3).map((err) => `! ${err.code}: ${err.message}`);
}

function connectionBanner(session: ClientSession): string[] {
  if (session.connection === "open") return [];
  return [`=== CONNECTION ${session.connection.toUpperCase()} — live updates paused ===`];
}

// -- the three screens ---------------------------------------------------------

export function renderWizardView(session: ClientSession): string {
  const lines: string[] = [];
  lines.push(...connectionBanner(session));
  lines.push(
    `Trial ${session.trial?.name ?? "?"} — wizard ${session.displayName}` +
      ` (${session.actorId})`,
  );

  const micIcon = session.micState.on ? "MIC ON" : "MIC OFF";
  const micBits = [`[${micIcon}] changed by ${session.micState.changedBy || "—"}`];
  if (session.hasFeature(MIC_CONTROL)) micBits.push("(Ctrl/Cmd+Q toggles)");
  lines.push(micBits.join(" "));

  if (session.hasFeature(CONTENT_PLAYBACK)) {
    const pb = session.playbackState;
    lines.push(
      pb.active
        ? `[PLAYBACK at ${pb.progressIndex ?? 0}] (Esc stops)`
        : "[playback idle] (Esc plays from caret)",
    );
  }

  if (session.hasFeature(COLLAB_EDITOR)) {
    lines.push("--- editor ---");
    lines.push(renderTranscript(session, session.hasFeature(PRESENCE_CURSORS)));
    if (session.hasFeature(LINE_BREAK)) lines.push("(Enter inserts a line break)");
    const menu = bubbleMenuActions(session);
    if (menu.length > 0) {
      lines.push(`bubble menu: ${menu.map((a) => a.label).join(" | ")}`);
    }
  } else {
    lines.push("--- transcript (read-only) ---");
    lines.push(renderTranscript(session, false));
  }

  if (session.hasFeature(LABELS) && session.labels.size > 0) {
    const defs = [...session.labels.values()]
      .sort((a, b) => a.labelId.localeCompare(b.labelId))
      .map((label) => `${label.name} (${label.color})`);
    lines.push(`labels: ${defs.join(", ")}`);
  }

  if (session.hasFeature(SPEECH_BOXES)) {
    lines.push("--- speech boxes ---");
    const boxes = [...session.boxes.values()].sort((a, b) =>
      a.boxId.localeCompare(b.boxId),
    );
    for (const box of boxes) {
      lines.push(`  (${box.kind}) ${box.boxId}: "${box.text}" [play]`);
    }
    const speaking = session.speakerState;
    lines.push(
      speaking.active
        ? `  speaker: ACTIVE${speaking.boxId ? ` (box ${speaking.boxId})` : ""}`
        : "  speaker: idle",
    );
  }

  if (session.hasFeature(SUMMARY_NOTES)) {
    lines.push("--- notes ---");
    lines.push(...renderNotes(session));
  }

  lines.push(...renderErrors(session));
  return lines.join("\n");
}

export function renderEndUserView(session: ClientSession): string {
  const lines: string[] = [];
  lines.push(...connectionBanner(session));
  lines.push(`Session ${session.trial?.name ?? "?"}`);
  lines.push(
    `${session.micState.on ? "[MIC OPEN]" : "[MIC CLOSED]"} ` +
      `${session.speakerState.active ? "[SPEAKER ACTIVE]" : "[speaker quiet]"}`,
  );
  lines.push("--- transcript ---");
  lines.push(renderTranscript(session, false)); // never presence, by contract
  const notes = renderNotes(session);
  if (notes.length > 0) {
    lines.push("--- notes ---");
    lines.push(...notes);
  }
  for (const line of session.interim.values()) {
    lines.push(`… ${line.text}`);
  }
  lines.push(...renderErrors(session));
  return lines.join("\n");
}

export interface AdminViewOptions {
  logBaseUrl?: string;
}

export function renderAdminView(trials: TrialInfo[], options: AdminViewOptions = {}): string {
  const lines: string[] = [];
  lines.push("=== Trials ===");
  for (const trial of trials) {
    lines.push(`${trial.trialId}  ${trial.name}  [${trial.status}]`);
    for (const member of trial.members) {
      const features = trial.features[member.actorId];
      lines.push(
        `    ${member.role.padEnd(8)} ${member.actorId} (${member.displayName})` +
          (features !== undefined ? `  features: ${features.join(", ")}` : ""),
      );
    }
    const actions = ["[enter]", "[delete]"];
    if (options.logBaseUrl !== undefined) {
      actions.push(`[download ${options.logBaseUrl}/trials/${trial.trialId}/log.csv]`);
    } else {
      actions.push("[download log.csv]");
    }
    lines.push(`    ${actions.join(" ")}`);
  }
  lines.push("=== New trial ===");
  lines.push("name: ____________  [create]");
  lines.push("feature selection:");
  for (const feature of ALL_FEATURES) {
    lines.push(`  [ ] ${feature}`);
  }
  return lines.join("\n");
}
