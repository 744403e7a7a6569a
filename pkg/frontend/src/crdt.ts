/**
 * Client replica of the shared-transcript CRDT.
 *
 * Same model the server speaks: every character is an item keyed
 * `(replica, counter)` attached to its visible predecessor at insert time;
 * deletion tombstones; siblings under one parent order by descending
 * `(lamport, replica)`; mark spans are last-writer-wins per
 * `(start, end, key)` slot. Remote ops may arrive duplicated or out of
 * order — missing dependencies are buffered and drained when they land —
 * so typing can be applied locally first and reconciled later.
 */

export type ItemId = readonly [replica: number, counter: number];

export const BEFORE = "BEFORE";
export const AFTER = "AFTER";
export type Bias = typeof BEFORE | typeof AFTER;

export interface Anchor {
  item: ItemId | null; // null = document root
  bias: Bias;
}

export interface MarkSpan {
  start: Anchor;
  end: Anchor;
  key: string;
  value: string;
  stamp: readonly [lamport: number, replica: number];
}

export interface InsertOp {
  kind: "INSERT";
  id: ItemId;
  parent: ItemId | null;
  lamport: number;
  content: string;
}

export interface DeleteOp {
  kind: "DELETE";
  id: ItemId;
  target: ItemId;
}

export interface MarkOp {
  kind: "MARK";
  id: ItemId;
  span: MarkSpan;
}

export type DocOp = InsertOp | DeleteOp | MarkOp;

export interface AppliedReport {
  applied: number;
  deferred: number;
  malformed: number;
}

interface Item {
  id: ItemId;
  parent: ItemId | null;
  lamport: number;
  content: string;
  tombstone: boolean;
}

const ROOT_KEY = "";

function keyOf(id: ItemId): string {
  return `${id[0]}:${id[1]}`;
}

function parentKeyOf(id: ItemId | null): string {
  return id === null ? ROOT_KEY : keyOf(id);
}

function stampGreater(a: readonly [number, number], b: readonly [number, number]): boolean {
  return a[0] !== b[0] ? a[0] > b[0] : a[1] > b[1];
}

export class MalformedOpError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MalformedOpError";
  }
}

// -- wire conversion ---------------------------------------------------------

export function opToWire(op: DocOp): Record<string, unknown> {
  switch (op.kind) {
    case "INSERT":
      return {
        kind: "INSERT",
        id: [...op.id],
        parent: op.parent === null ? null : [...op.parent],
        lamport: op.lamport,
        content: op.content,
      };
    case "DELETE":
      return { kind: "DELETE", id: [...op.id], target: [...op.target] };
    case "MARK":
      return {
        kind: "MARK",
        id: [...op.id],
        span: {
          start: anchorToWire(op.span.start),
          end: anchorToWire(op.span.end),
          key: op.span.key,
          value: op.span.value,
          stamp: [...op.span.stamp],
        },
      };
  }
}

export function anchorToWire(anchor: Anchor): Record<string, unknown> {
  return { item: anchor.item === null ? null : [...anchor.item], bias: anchor.bias };
}

function itemIdFromWire(raw: unknown): ItemId {
  if (!Array.isArray(raw) || raw.length !== 2) {
    throw new MalformedOpError("item id must be a [replica, counter] pair");
  }
  const [replica, counter] = raw;
  if (!Number.isInteger(replica) || !Number.isInteger(counter)) {
    throw new MalformedOpError("item id parts must be ints");
  }
  if (replica < 0 || counter < 1) {
    throw new MalformedOpError("item id out of range");
  }
  return [replica, counter];
}

function optItemIdFromWire(raw: unknown): ItemId | null {
  return raw === null || raw === undefined ? null : itemIdFromWire(raw);
}

export function anchorFromWire(raw: unknown): Anchor {
  if (raw === null || typeof raw !== "object") {
    throw new MalformedOpError("anchor must be an object");
  }
  const record = raw as Record<string, unknown>;
  if (record.bias !== BEFORE && record.bias !== AFTER) {
    throw new MalformedOpError(`bad anchor bias ${String(record.bias)}`);
  }
  return { item: optItemIdFromWire(record.item), bias: record.bias };
}

export function opFromWire(raw: unknown): DocOp {
  if (raw === null || typeof raw !== "object" || Array.isArray(raw)) {
    throw new MalformedOpError("op is not an object");
  }
  const record = raw as Record<string, unknown>;
  const id = itemIdFromWire(record.id);
  switch (record.kind) {
    case "INSERT": {
      const content = record.content;
      const lamport = record.lamport;
      if (typeof content !== "string" || [...content].length !== 1) {
        throw new MalformedOpError("INSERT content must be one scalar");
      }
      if (!Number.isInteger(lamport) || (lamport as number) < 0) {
        throw new MalformedOpError("INSERT lamport must be a non-negative int");
      }
      return {
        kind: "INSERT",
        id,
        parent: optItemIdFromWire(record.parent),
        lamport: lamport as number,
        content,
      };
    }
    case "DELETE":
      return { kind: "DELETE", id, target: itemIdFromWire(record.target) };
    case "MARK": {
      const span = record.span;
      if (span === null || typeof span !== "object") {
        throw new MalformedOpError("MARK needs a span object");
      }
      const s = span as Record<string, unknown>;
      const stamp = s.stamp;
      if (!Array.isArray(stamp) || stamp.length !== 2) {
        throw new MalformedOpError("MARK stamp must be a pair");
      }
      return {
        kind: "MARK",
        id,
        span: {
          start: anchorFromWire(s.start),
          end: anchorFromWire(s.end),
          key: String(s.key),
          value: String(s.value),
          stamp: [Number(stamp[0]), Number(stamp[1])],
        },
      };
    }
    default:
      throw new MalformedOpError(`unknown op kind ${String(record.kind)}`);
  }
}

// -- the replica --------------------------------------------------------------

export class Doc {
  readonly replica: number;

  private items = new Map<string, Item>();
  private children = new Map<string, ItemId[]>([[ROOT_KEY, []]]);
  private marks = new Map<string, MarkSpan>();
  private lamportClock = 0;
  private counter = 0;
  private frontier = new Map<number, number>();
  private appliedAbove = new Map<number, Set<number>>();
  private appliedLog: DocOp[] = [];
  private pending = new Map<string, DocOp[]>();
  private pendingCount = 0;

  constructor(replica: number) {
    if (replica < 0 || !Number.isInteger(replica)) {
      throw new RangeError("replica must be a non-negative integer");
    }
    this.replica = replica;
  }

  // -- local editing ----------------------------------------------------

  text(): string {
    let out = "";
    for (const item of this.walk()) {
      if (!item.tombstone) out += item.content;
    }
    return out;
  }

  length(): number {
    let n = 0;
    for (const item of this.walk()) {
      if (!item.tombstone) n += 1;
    }
    return n;
  }

  localInsert(index: number, text: string): DocOp[] {
    const visible = this.visible();
    if (index < 0 || index > visible.length) {
      throw new RangeError(`insert at ${index} in doc of length ${visible.length}`);
    }
    let parent: ItemId | null = index > 0 ? visible[index - 1].id : null;
    const ops: DocOp[] = [];
    for (const ch of text) {
      this.counter += 1;
      this.lamportClock += 1;
      const op: InsertOp = {
        kind: "INSERT",
        id: [this.replica, this.counter],
        parent,
        lamport: this.lamportClock,
        content: ch,
      };
      this.integrate(op);
      ops.push(op);
      parent = op.id;
    }
    return ops;
  }

  localDelete(index: number, length: number): DocOp[] {
    const visible = this.visible();
    if (length < 0 || index < 0 || index + length > visible.length) {
      throw new RangeError(
        `delete [${index}, ${index + length}) in doc of length ${visible.length}`,
      );
    }
    const ops: DocOp[] = [];
    for (const item of visible.slice(index, index + length)) {
      this.counter += 1;
      const op: DeleteOp = { kind: "DELETE", id: [this.replica, this.counter], target: item.id };
      this.integrate(op);
      ops.push(op);
    }
    return ops;
  }

  setMark(start: Anchor, end: Anchor, key: string, value: string): DocOp {
    if (this.resolveIndex(start) > this.resolveIndex(end)) {
      throw new RangeError(`mark range inverted for key ${key}`);
    }
    this.counter += 1;
    this.lamportClock += 1;
    const op: MarkOp = {
      kind: "MARK",
      id: [this.replica, this.counter],
      span: { start, end, key, value, stamp: [this.lamportClock, this.replica] },
    };
    this.integrate(op);
    return op;
  }

  // -- remote integration -------------------------------------------------

  applyRemote(ops: Iterable<unknown>): AppliedReport {
    const report: AppliedReport = { applied: 0, deferred: 0, malformed: 0 };
    for (const raw of ops) {
      let op: DocOp;
      try {
        op = opFromWire(raw);
      } catch (err) {
        if (err instanceof MalformedOpError) {
          report.malformed += 1;
          continue;
        }
        throw err;
      }
      if (this.seen(op.id)) continue;
      const missing = this.missingDep(op);
      if (missing !== null) {
        this.park(missing, op);
        continue;
      }
      report.applied += this.integrate(op);
    }
    report.deferred = this.pendingCount;
    return report;
  }

  private missingDep(op: DocOp): ItemId | null {
    if (op.kind === "INSERT") {
      if (op.parent !== null && !this.items.has(keyOf(op.parent))) return op.parent;
    } else if (op.kind === "DELETE") {
      if (!this.items.has(keyOf(op.target))) return op.target;
    } else {
      for (const anchor of [op.span.start, op.span.end]) {
        if (anchor.item !== null && !this.items.has(keyOf(anchor.item))) return anchor.item;
      }
    }
    return null;
  }

  private park(missing: ItemId, op: DocOp): void {
    const queue = this.pending.get(keyOf(missing));
    if (queue === undefined) {
      this.pending.set(keyOf(missing), [op]);
    } else {
      queue.push(op);
    }
    this.pendingCount += 1;
  }

  private seen(id: ItemId): boolean {
    const [replica, counter] = id;
    if (counter <= (this.frontier.get(replica) ?? 0)) return true;
    return this.appliedAbove.get(replica)?.has(counter) ?? false;
  }

  private integrate(op: DocOp): number {
    let count = 0;
    const worklist: DocOp[] = [op];
    while (worklist.length > 0) {
      const current = worklist.pop() as DocOp;
      if (this.seen(current.id)) {
        // a duplicate parked twice drains as two worklist entries
        continue;
      }
      this.applyReady(current);
      count += 1;
      if (current.kind === "INSERT") {
        const waiting = this.pending.get(keyOf(current.id));
        if (waiting !== undefined) {
          this.pending.delete(keyOf(current.id));
          for (const parked of waiting) {
            this.pendingCount -= 1;
            if (this.seen(parked.id)) continue;
            const missing = this.missingDep(parked);
            if (missing === null) {
              worklist.push(parked);
            } else {
              this.park(missing, parked); // had a second unmet dependency
            }
          }
        }
      }
    }
    return count;
  }

  private applyReady(op: DocOp): void {
    if (op.kind === "INSERT") {
      const item: Item = {
        id: op.id,
        parent: op.parent,
        lamport: op.lamport,
        content: op.content,
        tombstone: false,
      };
      this.items.set(keyOf(op.id), item);
      if (!this.children.has(keyOf(op.id))) this.children.set(keyOf(op.id), []);
      const parentKey = parentKeyOf(op.parent);
      let siblings = this.children.get(parentKey);
      if (siblings === undefined) {
        siblings = [];
        this.children.set(parentKey, siblings);
      }
      siblings.push(op.id);
      siblings.sort((a, b) => {
        const itemA = this.items.get(keyOf(a)) as Item;
        const itemB = this.items.get(keyOf(b)) as Item;
        return itemB.lamport - itemA.lamport || b[0] - a[0];
      });
      this.lamportClock = Math.max(this.lamportClock, op.lamport);
    } else if (op.kind === "DELETE") {
      (this.items.get(keyOf(op.target)) as Item).tombstone = true;
    } else {
      const span = op.span;
      const slot = markSlot(span);
      const current = this.marks.get(slot);
      if (current === undefined || stampGreater(span.stamp, current.stamp)) {
        this.marks.set(slot, span);
      }
      this.lamportClock = Math.max(this.lamportClock, span.stamp[0]);
    }
    this.recordApplied(op);
  }

  private recordApplied(op: DocOp): void {
    this.appliedLog.push(op);
    const [replica, counter] = op.id;
    let above = this.appliedAbove.get(replica);
    if (above === undefined) {
      above = new Set();
      this.appliedAbove.set(replica, above);
    }
    above.add(counter);
    let frontier = this.frontier.get(replica) ?? 0;
    while (above.has(frontier + 1)) {
      frontier += 1;
      above.delete(frontier);
    }
    this.frontier.set(replica, frontier);
  }

  // -- snapshots ------------------------------------------------------------

  versionVector(): Record<string, number> {
    const out: Record<string, number> = {};
    for (const [replica, counter] of this.frontier) {
      if (counter > 0) out[String(replica)] = counter;
    }
    return out;
  }

  opsSince(vv: Record<string, number>): DocOp[] {
    return this.appliedLog.filter((op) => op.id[1] > (vv[String(op.id[0])] ?? 0));
  }

  opLog(): DocOp[] {
    return [...this.appliedLog];
  }

  pendingOps(): number {
    return this.pendingCount;
  }

  // -- anchors ---------------------------------------------------------------

  createAnchor(index: number, bias: Bias): Anchor {
    const visible = this.visible();
    if (index < 0 || index > visible.length) {
      throw new RangeError(`anchor at ${index} in doc of length ${visible.length}`);
    }
    if (bias === BEFORE) {
      if (index < visible.length) return { item: visible[index].id, bias: BEFORE };
      if (visible.length > 0) return { item: visible[visible.length - 1].id, bias: AFTER };
      return { item: null, bias: BEFORE };
    }
    if (index > 0) return { item: visible[index - 1].id, bias: AFTER };
    return { item: null, bias: AFTER };
  }

  resolveIndex(anchor: Anchor): number {
    if (anchor.item === null) return 0;
    const target = this.items.get(keyOf(anchor.item));
    if (target === undefined) {
      throw new RangeError(`anchor item ${keyOf(anchor.item)} never integrated`);
    }
    let index = 0;
    for (const item of this.walk()) {
      if (item.id[0] === anchor.item[0] && item.id[1] === anchor.item[1]) {
        if (item.tombstone) return index; // the gap the item would occupy
        return anchor.bias === AFTER ? index + 1 : index;
      }
      if (!item.tombstone) index += 1;
    }
    throw new RangeError(`anchor item ${keyOf(anchor.item)} missing from walk`);
  }

  resolveMarks(): { start: number; end: number; key: string; value: string }[] {
    const out: { start: number; end: number; key: string; value: string }[] = [];
    for (const span of this.marks.values()) {
      out.push({
        start: this.resolveIndex(span.start),
        end: this.resolveIndex(span.end),
        key: span.key,
        value: span.value,
      });
    }
    out.sort((a, b) => a.start - b.start || a.end - b.end || a.key.localeCompare(b.key));
    return out;
  }

  markState(): Map<string, readonly [string, readonly [number, number]]> {
    const out = new Map<string, readonly [string, readonly [number, number]]>();
    for (const [slot, span] of this.marks) {
      out.set(slot, [span.value, span.stamp]);
    }
    return out;
  }

  // -- traversal ---------------------------------------------------------------

  private *walk(): Generator<Item> {
    const stack = [...(this.children.get(ROOT_KEY) ?? [])].reverse();
    while (stack.length > 0) {
      const id = stack.pop() as ItemId;
      const item = this.items.get(keyOf(id)) as Item;
      yield item;
      const kids = this.children.get(keyOf(id));
      if (kids !== undefined && kids.length > 0) {
        for (let i = kids.length - 1; i >= 0; i -= 1) stack.push(kids[i]);
      }
    }
  }

  private visible(): Item[] {
    const out: Item[] = [];
    for (const item of this.walk()) {
      if (!item.tombstone) out.push(item);
    }
    return out;
  }
}

function markSlot(span: MarkSpan): string {
  const part = (anchor: Anchor) =>
    anchor.item === null ? `root|${anchor.bias}` : `${keyOf(anchor.item)}|${anchor.bias}`;
  return `${part(span.start)}>>${part(span.end)}#${span.key}`;
}

