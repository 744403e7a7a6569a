import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { AFTER, BEFORE, Doc, opToWire } from "../src/crdt.js";

function fixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

interface CrdtFixture {
  delivery: Record<string, unknown>[];
  opCount: number;
  expectedText: string;
  expectedMarks: { start: number; end: number; key: string; value: string }[];
  versionVector: Record<string, number>;
}

describe("replica parity with the server implementation", () => {
  const fx = fixture<CrdtFixture>("crdt_session.json");

  it("converges to the server's text through scrambled, duplicated delivery", () => {
    const doc = new Doc(9);
    const report = doc.applyRemote(fx.delivery);
    expect(report.applied).toBe(fx.opCount);
    expect(report.deferred).toBe(0);
    expect(report.malformed).toBe(0);
    expect(doc.text()).toBe(fx.expectedText);
    expect(doc.resolveMarks()).toEqual(fx.expectedMarks);
    expect(doc.versionVector()).toEqual(fx.versionVector);
  });

  it("treats a second delivery of the whole stream as a no-op", () => {
    const doc = new Doc(9);
    doc.applyRemote(fx.delivery);
    const again = doc.applyRemote(fx.delivery);
    expect(again.applied).toBe(0);
    expect(doc.text()).toBe(fx.expectedText);
  });
});

describe("local editing", () => {
  it("inserts and deletes by visible index", () => {
    const doc = new Doc(1);
    doc.localInsert(0, "hello world");
    doc.localDelete(5, 6);
    expect(doc.text()).toBe("hello");
    doc.localInsert(5, "!");
    expect(doc.text()).toBe("hello!");
    expect(doc.length()).toBe(6);
  });

  it("counts astral characters as single positions", () => {
    const doc = new Doc(1);
    doc.localInsert(0, "a𝄞b");
    expect(doc.length()).toBe(3);
    doc.localDelete(1, 1);
    expect(doc.text()).toBe("ab");
  });

  it("rejects out-of-range edits and inverted marks", () => {
    const doc = new Doc(1);
    doc.localInsert(0, "abc");
    expect(() => doc.localInsert(4, "x")).toThrow(RangeError);
    expect(() => doc.localDelete(1, 3)).toThrow(RangeError);
    const late = doc.createAnchor(3, BEFORE);
    const early = doc.createAnchor(0, BEFORE);
    expect(() => doc.setMark(late, early, "K", "v")).toThrow(RangeError);
  });
});

describe("convergence between live replicas", () => {
  function exchange(a: Doc, b: Doc): void {
    const fromA = a.opsSince(b.versionVector()).map(opToWire);
    const fromB = b.opsSince(a.versionVector()).map(opToWire);
    a.applyRemote(fromB);
    b.applyRemote(fromA);
  }

  it("merges concurrent edits identically on both sides", () => {
    const a = new Doc(1);
    const b = new Doc(2);
    a.localInsert(0, "shared base\n");
    exchange(a, b);

    a.localInsert(6, "wizard ");
    b.localDelete(0, 7); // delete "shared "
    b.localInsert(0, "the ");
    exchange(a, b);

    expect(a.text()).toBe(b.text());
    expect(a.resolveMarks()).toEqual(b.resolveMarks());
  });

  it("orders concurrent same-position inserts the same way everywhere", () => {
    const a = new Doc(1);
    const b = new Doc(2);
    const c = new Doc(3);
    a.localInsert(0, "|");
    const seed = a.opLog().map(opToWire);
    b.applyRemote(seed);
    c.applyRemote(seed);

    a.localInsert(1, "A");
    b.localInsert(1, "B");
    c.localInsert(1, "C");
    const all = [
      ...a.opsSince({}).map(opToWire),
      ...b.opsSince({}).map(opToWire),
      ...c.opsSince({}).map(opToWire),
    ];
    for (const doc of [a, b, c]) doc.applyRemote(all);

    expect(b.text()).toBe(a.text());
    expect(c.text()).toBe(a.text());
  });

  it("buffers ops until their dependencies arrive", () => {
    const author = new Doc(1);
    author.localInsert(0, "xyz");
    const [first, second, third] = author.opLog().map(opToWire);

    const late = new Doc(2);
    let report = late.applyRemote([third, second]);
    expect(report.applied).toBe(0);
    expect(report.deferred).toBe(2);
    expect(late.text()).toBe("");

    report = late.applyRemote([first]);
    expect(report.applied).toBe(3);
    expect(report.deferred).toBe(0);
    expect(late.text()).toBe("xyz");
  });
});

describe("anchors", () => {
  it("keeps BEFORE anchors attached through inserts and AFTER at the tail", () => {
    const doc = new Doc(1);
    doc.localInsert(0, "abc");
    const atB = doc.createAnchor(1, BEFORE);
    const tail = doc.createAnchor(3, AFTER);
    doc.localInsert(1, "XX"); // aXXbc
    expect(doc.resolveIndex(atB)).toBe(3);
    expect(doc.resolveIndex(tail)).toBe(5);
  });

  it("resolves an anchor on a deleted item to the gap it occupied", () => {
    const doc = new Doc(1);
    doc.localInsert(0, "abcd");
    const atC = doc.createAnchor(2, BEFORE);
    doc.localDelete(2, 1); // abd
    expect(doc.resolveIndex(atC)).toBe(2);
    expect(doc.resolveIndex({ item: null, bias: BEFORE })).toBe(0);
  });
});

describe("malformed wire ops", () => {
  it("counts rejects without applying them", () => {
    const doc = new Doc(1);
    const good = new Doc(2);
    good.localInsert(0, "ok");
    const [first, second] = good.opLog().map(opToWire);
    const report = doc.applyRemote([
      first,
      { kind: "INSERT", id: [0, 0], parent: null, lamport: 1, content: "x" },
      { kind: "INSERT", id: [5, 1], parent: null, lamport: 1, content: "xy" },
      { kind: "TELEPORT", id: [5, 2] },
      second,
    ]);
    expect(report.applied).toBe(2);
    expect(report.malformed).toBe(3);
    expect(doc.text()).toBe("ok");
  });
});
