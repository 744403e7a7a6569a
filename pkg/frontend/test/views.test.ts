import { describe, expect, it } from "vitest";

import { anchorToWire, BEFORE, Doc, opToWire } from "../src/crdt.js";
import {
  ALL_FEATURES,
  bubbleMenuActions,
  renderAdminView,
  renderEndUserView,
  renderWizardView,
} from "../src/views.js";
import { TrialInfo } from "../src/client.js";
import { connectedSession, DEFAULT_FEATURES, Harness, welcomePayload } from "./helpers.js";

/** A welcomed wizard session over a two-line document with trimmings. */
function richSession(features: string[] = DEFAULT_FEATURES): Harness {
  const server = new Doc(0);
  const ops = server.localInsert(0, "Book a table for two.\nAround seven tonight.\n");
  const harness = connectedSession({ features });
  const anchor = (index: number) => anchorToWire(server.createAnchor(index, BEFORE));
  harness.socket.receive({
    type: "WELCOME",
    trialId: "t-1",
    payload: {
      ...welcomePayload({ features }),
      ops: ops.map(opToWire),
      labels: [
        { labelId: "L1", name: "Request", color: "red", createdBy: "w2", stamp: [9, 0] },
      ],
      annotations: [
        {
          annoId: "a1", kind: "LABEL", start: anchor(22), end: anchor(28),
          author: "w2", stamp: [10, 0], labelId: "L1", category: null, noteText: null,
        },
        {
          annoId: "a2", kind: "HIGHLIGHT", start: anchor(17), end: anchor(20),
          author: "w2", stamp: [11, 0], labelId: null, category: "yellow", noteText: null,
        },
        {
          annoId: "a3", kind: "NOTE", start: anchor(0), end: anchor(4),
          author: "w2", stamp: [12, 0], labelId: null, category: null,
          noteText: "confirm the exact time",
        },
      ],
      boxes: [{ boxId: "b1", kind: "PRESET", text: "one moment please" }],
    },
  });
  harness.socket.receive({
    type: "AWARENESS",
    trialId: "t-1",
    serverSeq: 1,
    payload: {
      actorId: "w2", displayName: "Lena", color: "#0f0", seq: 1,
      expiresAt: 60_000, caret: anchor(7), selection: null, pointer: null,
    },
  });
  return harness;
}

describe("wizard view", () => {
  it("renders every panel with the full feature set", () => {
    const { session } = richSession();
    const view = renderWizardView(session);
    expect(view).toContain("Trial Session A — wizard Daisy (w1)");
    expect(view).toContain("[MIC OFF]");
    expect(view).toContain("(Ctrl/Cmd+Q toggles)");
    expect(view).toContain("(Esc plays from caret)");
    expect(view).toContain("--- editor ---");
    expect(view).toContain("Book a ⟦Lena⟧table for «two».");
    expect(view).toContain("[Request] Around seven tonight.");
    expect(view).toContain("(Enter inserts a line break)");
    expect(view).toContain(
      "bubble menu: Highlight selection | Attach label | Add note",
    );
    expect(view).toContain("labels: Request (red)");
    expect(view).toContain('(PRESET) b1: "one moment please" [play]');
    expect(view).toContain("speaker: idle");
    expect(view).toContain("• [0,4) w2: confirm the exact time");
  });

  const markers: Record<string, string[]> = {
    COLLAB_EDITOR: ["--- editor ---"],
    MIC_CONTROL: ["(Ctrl/Cmd+Q toggles)"],
    SPEECH_BOXES: ["--- speech boxes ---", "[play]", "speaker:"],
    CONTENT_PLAYBACK: ["(Esc plays from caret)"],
    LINE_BREAK: ["(Enter inserts a line break)"],
    PRESENCE_CURSORS: ["⟦Lena⟧"],
    LABELS: ["labels: Request (red)", "Attach label"],
    HIGHLIGHTS: ["Highlight selection"],
    SUMMARY_NOTES: ["--- notes ---", "Add note"],
    BUBBLE_MENU: ["bubble menu:"],
  };

  for (const feature of ALL_FEATURES) {
    it(`drops every ${feature} affordance when the feature is absent`, () => {
      const trimmed = DEFAULT_FEATURES.filter((f) => f !== feature);
      const view = renderWizardView(richSession(trimmed).session);
      for (const marker of markers[feature]) {
        expect(view).not.toContain(marker);
      }
      const full = renderWizardView(richSession().session);
      for (const marker of markers[feature]) {
        expect(full).toContain(marker);
      }
    });
  }

  it("falls back to a read-only transcript without the editor", () => {
    const view = renderWizardView(richSession(["MIC_CONTROL"]).session);
    expect(view).toContain("--- transcript (read-only) ---");
    expect(view).toContain("Book a table for «two».");
    expect(view).not.toContain("⟦"); // no cursors without the feature
  });

  it("shows mic and playback state flips", () => {
    const harness = richSession();
    harness.socket.receive({
      type: "MIC_STATE", trialId: "t-1", serverSeq: 2,
      payload: { on: true, changedBy: "w2", changedAt: 1 },
    });
    harness.socket.receive({
      type: "PLAYBACK_TOGGLE", trialId: "t-1", serverSeq: 3,
      payload: { action: "START", fromIndex: 22 },
    });
    const view = renderWizardView(harness.session);
    expect(view).toContain("[MIC ON] changed by w2");
    expect(view).toContain("[PLAYBACK at 22] (Esc stops)");
  });

  it("surfaces recent errors non-modally", () => {
    const harness = richSession();
    harness.socket.receive({
      type: "ERROR", trialId: "t-1",
      payload: { code: "FEATURE_DISABLED", message: "LABELS required" },
    });
    expect(renderWizardView(harness.session)).toContain(
      "! FEATURE_DISABLED: LABELS required",
    );
  });
});

describe("bubble menu", () => {
  it("offers nothing without the menu feature, even with annotation rights", () => {
    const { session } = richSession(["COLLAB_EDITOR", "HIGHLIGHTS", "LABELS"]);
    expect(bubbleMenuActions(session)).toEqual([]);
  });

  it("offers only the granted annotation kinds", () => {
    const { session } = richSession(["COLLAB_EDITOR", "BUBBLE_MENU", "SUMMARY_NOTES"]);
    expect(bubbleMenuActions(session).map((a) => a.action)).toEqual(["NOTE"]);
  });
});

describe("end-user view", () => {
  it("shows the annotated transcript and state icons, never presence", () => {
    const harness = richSession();
    const view = renderEndUserView(harness.session);
    expect(view).toContain("[MIC CLOSED]");
    expect(view).toContain("[speaker quiet]");
    expect(view).toContain("Book a table for «two».");
    expect(view).toContain("[Request] Around seven tonight.");
    expect(view).toContain("confirm the exact time");
    // presence is in the session mirror, but the end-user screen must not show it
    expect(harness.session.presence.size).toBe(1);
    expect(view).not.toContain("⟦");
    expect(view).not.toContain("Lena");
  });

  it("reflects mic and speaker flips as icons", () => {
    const harness = richSession();
    harness.socket.receive({
      type: "MIC_STATE", trialId: "t-1", serverSeq: 2,
      payload: { on: true, changedBy: "w1", changedAt: 1 },
    });
    harness.socket.receive({
      type: "SPEAKER_STATE", trialId: "t-1", serverSeq: 3,
      payload: { active: true, boxId: "b1", durationMs: 700 },
    });
    const view = renderEndUserView(harness.session);
    expect(view).toContain("[MIC OPEN]");
    expect(view).toContain("[SPEAKER ACTIVE]");
  });

  it("shows live interim dictation and a reconnect banner", () => {
    const harness = connectedSession({
      role: "END_USER",
      session: { autoReconnect: true, reconnectDelayMs: 60_000 },
    });
    harness.socket.receive({
      type: "TRANSCRIPT_EVENT", trialId: "t-1", serverSeq: 1,
      payload: { kind: "INTERIM", text: "book a ta", segmentId: 0 },
    });
    let view = renderEndUserView(harness.session);
    expect(view).toContain("… book a ta");
    expect(view).not.toContain("CONNECTION");

    harness.socket.dropConnection();
    view = renderEndUserView(harness.session);
    expect(view).toContain("=== CONNECTION RECONNECTING — live updates paused ===");
    harness.session.close();
  });
});

describe("admin view", () => {
  const trials: TrialInfo[] = [
    {
      trialId: "t-7",
      name: "Study Session 7",
      status: "RUNNING",
      createdAt: 1_700_000_000_000,
      members: [
        { actorId: "daisy", role: "WIZARD", displayName: "Daisy" },
        { actorId: "p01", role: "END_USER", displayName: "Participant" },
      ],
      features: { daisy: ["COLLAB_EDITOR", "MIC_CONTROL"] },
    },
  ];

  it("lists trials with members, feature assignments, and actions", () => {
    const view = renderAdminView(trials, { logBaseUrl: "http://127.0.0.1:1234" });
    expect(view).toContain("t-7  Study Session 7  [RUNNING]");
    expect(view).toContain("WIZARD   daisy (Daisy)  features: COLLAB_EDITOR, MIC_CONTROL");
    expect(view).toContain("END_USER p01 (Participant)");
    expect(view).toContain("[enter] [delete]");
    expect(view).toContain("[download http://127.0.0.1:1234/trials/t-7/log.csv]");
  });

  it("offers the full feature selection list for new trials", () => {
    const view = renderAdminView([]);
    expect(view).toContain("=== New trial ===");
    for (const feature of ALL_FEATURES) {
      expect(view).toContain(`[ ] ${feature}`);
    }
  });
});
