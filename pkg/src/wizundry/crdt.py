"""Causal-tree sequence CRDT for the shared transcript.

Every character is an immutable ``Item`` identified by ``(replica, counter)``
and attached to the item that was its visible predecessor at local insert
time (``parent``; ``None`` means the document root). Deletion tombstones the
item. The rendered document is a depth-first walk of the parent tree where
each parent's children follow it immediately, siblings ordered by descending
``(lamport, replica)``.

## Determinism

Concurrent inserts under the same parent are totally ordered by the sibling
rule, so any two replicas that have integrated the same set of operations
render the same text, mark set, and anchor resolutions, regardless of
delivery order.

## Out-of-order delivery

``apply_remote`` accepts duplicated and arbitrarily reordered operations.
An operation whose dependencies (insert parent, delete target, mark anchor
items) are not yet integrated is buffered and drained as soon as the missing
item arrives. Integration is idempotent: every operation carries an
``(replica, counter)`` id drawn from the issuing replica's single counter
sequence, and already-seen ids are ignored.

## Anchors

An ``Anchor`` names an item plus a side (BEFORE/AFTER) instead of an index,
so annotations and playback positions survive concurrent edits. A tombstoned
anchor target resolves to the gap the item would occupy, which both biases
agree on; the root anchor always resolves to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .errors import IndexOutOfRange, MalformedOp, RangeInverted, UnknownItem

BEFORE = "BEFORE"
AFTER = "AFTER"

INSERT = "INSERT"
DELETE = "DELETE"
MARK = "MARK"


class ItemId(NamedTuple):
    replica: int
    counter: int


# The document root is modelled as ``None`` wherever an ItemId is optional.
ROOT: Optional[ItemId] = None


class Anchor(NamedTuple):
    item: Optional[ItemId]  # None = document root
    bias: str  # BEFORE | AFTER


@dataclass
class Item:
    id: ItemId
    parent: Optional[ItemId]
    lamport: int
    content: str  # exactly one Unicode scalar value
    tombstone: bool = False


@dataclass(frozen=True)
class MarkSpan:
    start: Anchor
    end: Anchor
    key: str
    value: str
    stamp: tuple[int, int]  # (lamport, replica); greatest stamp wins per (start, end, key)


@dataclass(frozen=True)
class DocOp:
    """One replicated operation. ``id`` is unique and orders the issuing
    replica's ops; for INSERT it doubles as the new item's id."""

    kind: str  # INSERT | DELETE | MARK
    id: ItemId
    # INSERT payload
    parent: Optional[ItemId] = None
    lamport: int = 0
    content: str = ""
    # DELETE payload
    target: Optional[ItemId] = None
    # MARK payload
    span: Optional[MarkSpan] = None

    def to_dict(self) -> dict:
        if self.kind == INSERT:
            return {
                "kind": INSERT,
                "id": list(self.id),
                "parent": list(self.parent) if self.parent is not None else None,
                "lamport": self.lamport,
                "content": self.content,
            }
        if self.kind == DELETE:
            return {"kind": DELETE, "id": list(self.id), "target": list(self.target)}
        if self.kind == MARK:
            span = self.span
            return {
                "kind": MARK,
                "id": list(self.id),
                "span": {
                    "start": _anchor_to_dict(span.start),
                    "end": _anchor_to_dict(span.end),
                    "key": span.key,
                    "value": span.value,
                    "stamp": list(span.stamp),
                },
            }
        raise MalformedOp(f"unknown op kind {self.kind!r}")

    @staticmethod
    def from_dict(raw: object) -> "DocOp":
        if not isinstance(raw, dict):
            raise MalformedOp("op is not an object")
        kind = raw.get("kind")
        try:
            op_id = _item_id(raw["id"])
            if kind == INSERT:
                content = raw["content"]
                lamport = raw["lamport"]
                if not isinstance(content, str) or len(content) != 1:
                    raise MalformedOp("INSERT content must be one scalar")
                if not isinstance(lamport, int) or lamport < 0:
                    raise MalformedOp("INSERT lamport must be a non-negative int")
                return DocOp(
                    kind=INSERT,
                    id=op_id,
                    parent=_opt_item_id(raw["parent"]),
                    lamport=lamport,
                    content=content,
                )
            if kind == DELETE:
                return DocOp(kind=DELETE, id=op_id, target=_item_id(raw["target"]))
            if kind == MARK:
                span = raw["span"]
                stamp = span["stamp"]
                if not (isinstance(stamp, (list, tuple)) and len(stamp) == 2):
                    raise MalformedOp("MARK stamp must be a pair")
                return DocOp(
                    kind=MARK,
                    id=op_id,
                    span=MarkSpan(
                        start=_anchor_from_dict(span["start"]),
                        end=_anchor_from_dict(span["end"]),
                        key=str(span["key"]),
                        value=str(span["value"]),
                        stamp=(int(stamp[0]), int(stamp[1])),
                    ),
                )
        except MalformedOp:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedOp(f"structurally invalid op: {exc}") from exc
        raise MalformedOp(f"unknown op kind {kind!r}")


def _item_id(raw: object) -> ItemId:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise MalformedOp("item id must be a [replica, counter] pair")
    replica, counter = raw
    if not isinstance(replica, int) or not isinstance(counter, int):
        raise MalformedOp("item id parts must be ints")
    if replica < 0 or counter < 1:
        raise MalformedOp("item id out of range")
    return ItemId(replica, counter)


def _opt_item_id(raw: object) -> Optional[ItemId]:
    return None if raw is None else _item_id(raw)


def _anchor_to_dict(anchor: Anchor) -> dict:
    return {
        "item": list(anchor.item) if anchor.item is not None else None,
        "bias": anchor.bias,
    }


def _anchor_from_dict(raw: object) -> Anchor:
    if not isinstance(raw, dict):
        raise MalformedOp("anchor must be an object")
    bias = raw.get("bias")
    if bias not in (BEFORE, AFTER):
        raise MalformedOp(f"bad anchor bias {bias!r}")
    return Anchor(item=_opt_item_id(raw.get("item")), bias=bias)


@dataclass
class AppliedReport:
    applied: int = 0
    deferred: int = 0
    malformed: int = 0


@dataclass
class Doc:
    """One replica's view of a trial document. Single-writer: callers must
    serialize mutations (the trial queue does this server-side)."""

    replica: int
    items: dict[ItemId, Item] = field(default_factory=dict)
    # parent -> children ids sorted descending by (lamport, replica)
    children: dict[Optional[ItemId], list[ItemId]] = field(default_factory=lambda: {None: []})
    marks: dict[tuple[Anchor, Anchor, str], MarkSpan] = field(default_factory=dict)
    lamport_clock: int = 0
    counter: int = 0
    # contiguously-applied frontier per replica, plus applied ids above it
    _frontier: dict[int, int] = field(default_factory=dict)
    _applied_above: dict[int, set[int]] = field(default_factory=dict)
    # integrated ops in integration order (parents always precede children)
    _applied_log: list[DocOp] = field(default_factory=list)
    # ops waiting for a missing item id
    _pending: dict[ItemId, list[DocOp]] = field(default_factory=dict)
    _pending_count: int = 0

    # -- local editing ---------------------------------------------------

    def text(self) -> str:
        return "".join(item.content for item in self._visible())

    def local_insert(self, index: int, text: str) -> list[DocOp]:
        visible = self._visible()
        if not (0 <= index <= len(visible)):
            raise IndexOutOfRange(f"insert at {index} in doc of length {len(visible)}")
        parent = visible[index - 1].id if index > 0 else ROOT
        ops: list[DocOp] = []
        for ch in text:
            self.counter += 1
            self.lamport_clock += 1
            op = DocOp(
                kind=INSERT,
                id=ItemId(self.replica, self.counter),
                parent=parent,
                lamport=self.lamport_clock,
                content=ch,
            )
            self._integrate(op)
            ops.append(op)
            parent = op.id
        return ops

    def local_delete(self, index: int, length: int) -> list[DocOp]:
        visible = self._visible()
        if length < 0 or not (0 <= index and index + length <= len(visible)):
            raise IndexOutOfRange(
                f"delete [{index}, {index + length}) in doc of length {len(visible)}"
            )
        ops: list[DocOp] = []
        for item in visible[index : index + length]:
            self.counter += 1
            op = DocOp(kind=DELETE, id=ItemId(self.replica, self.counter), target=item.id)
            self._integrate(op)
            ops.append(op)
        return ops

    def set_mark(self, start: Anchor, end: Anchor, key: str, value: str) -> DocOp:
        if self.resolve_index(start) > self.resolve_index(end):
            raise RangeInverted(f"mark range inverted for key {key!r}")
        self.counter += 1
        self.lamport_clock += 1
        op = DocOp(
            kind=MARK,
            id=ItemId(self.replica, self.counter),
            span=MarkSpan(
                start=start,
                end=end,
                key=key,
                value=value,
                stamp=(self.lamport_clock, self.replica),
            ),
        )
        self._integrate(op)
        return op

    # -- remote integration ----------------------------------------------

    def apply_remote(self, ops: Iterable[DocOp | dict]) -> AppliedReport:
        report = AppliedReport()
        for raw in ops:
            try:
                op = raw if isinstance(raw, DocOp) else DocOp.from_dict(raw)
            except MalformedOp:
                report.malformed += 1
                continue
            if self._seen(op.id):
                continue
            missing = self._missing_dep(op)
            if missing is not None:
                self._pending.setdefault(missing, []).append(op)
                self._pending_count += 1
                continue
            report.applied += self._integrate(op)
        report.deferred = self._pending_count
        return report

    def _missing_dep(self, op: DocOp) -> Optional[ItemId]:
        """First dependency id not yet integrated, or None when ready."""
        if op.kind == INSERT:
            if op.parent is not None and op.parent not in self.items:
                return op.parent
        elif op.kind == DELETE:
            if op.target not in self.items:
                return op.target
        elif op.kind == MARK:
            for anchor in (op.span.start, op.span.end):
                if anchor.item is not None and anchor.item not in self.items:
                    return anchor.item
        return None

    def _seen(self, op_id: ItemId) -> bool:
        if op_id.counter <= self._frontier.get(op_id.replica, 0):
            return True
        return op_id.counter in self._applied_above.get(op_id.replica, ())

    def _integrate(self, op: DocOp) -> int:
        """Apply one causally-ready, unseen op; drain anything it unblocks.

        Returns the number of ops integrated (op itself plus drained ones).
        """
        count = 0
        worklist = [op]
        while worklist:
            current = worklist.pop()
            if self._seen(current.id):
                # A duplicate parked twice drains as two worklist entries;
                # only the first may apply.
                continue
            self._apply_ready(current)
            count += 1
            if current.kind == INSERT:
                for waiting in self._pending.pop(current.id, []):
                    self._pending_count -= 1
                    if self._seen(waiting.id):
                        continue
                    missing = self._missing_dep(waiting)
                    if missing is None:
                        worklist.append(waiting)
                    else:  # op had a second unmet dependency; park it there
                        self._pending.setdefault(missing, []).append(waiting)
                        self._pending_count += 1
        return count

    def _apply_ready(self, op: DocOp) -> None:
        if op.kind == INSERT:
            item = Item(
                id=op.id, parent=op.parent, lamport=op.lamport, content=op.content
            )
            self.items[op.id] = item
            self.children.setdefault(op.id, [])
            siblings = self.children.setdefault(op.parent, [])
            siblings.append(op.id)
            siblings.sort(key=lambda cid: (self.items[cid].lamport, cid.replica), reverse=True)
            self.lamport_clock = max(self.lamport_clock, op.lamport)
        elif op.kind == DELETE:
            self.items[op.target].tombstone = True
        elif op.kind == MARK:
            span = op.span
            slot = (span.start, span.end, span.key)
            current = self.marks.get(slot)
            if current is None or span.stamp > current.stamp:
                self.marks[slot] = span
            self.lamport_clock = max(self.lamport_clock, span.stamp[0])
        else:  # pragma: no cover - from_dict rejects unknown kinds
            raise MalformedOp(f"unknown op kind {op.kind!r}")
        self._record_applied(op)

    def _record_applied(self, op: DocOp) -> None:
        self._applied_log.append(op)
        replica, counter = op.id
        above = self._applied_above.setdefault(replica, set())
        above.add(counter)
        frontier = self._frontier.get(replica, 0)
        while frontier + 1 in above:
            frontier += 1
            above.remove(frontier)
        self._frontier[replica] = frontier

    # -- snapshots ---------------------------------------------------------

    def version_vector(self) -> dict[int, int]:
        return {r: c for r, c in self._frontier.items() if c > 0}

    def ops_since(self, vv: dict[int, int]) -> list[DocOp]:
        """Integrated ops beyond ``vv`` in integration order, which is
        causally valid by construction (parents integrate first)."""
        return [op for op in self._applied_log if op.id.counter > vv.get(op.id.replica, 0)]

    def op_log(self) -> list[DocOp]:
        return list(self._applied_log)

    def pending_ops(self) -> int:
        return self._pending_count

    def check_invariants(self) -> None:
        """Structural self-check used by the test suite."""
        for parent, kids in self.children.items():
            assert parent is None or parent in self.items
            keys = [(self.items[k].lamport, k.replica) for k in kids]
            assert keys == sorted(keys, reverse=True), f"sibling order under {parent}"
            assert len(set(keys)) == len(keys), f"duplicate sibling key under {parent}"
        for item in self.items.values():
            assert item.id in self.children[item.parent]
        walked = [item.id for item in self._walk()]
        assert len(walked) == len(self.items) == len(set(walked))
        for replica, above in self._applied_above.items():
            assert self._frontier.get(replica, 0) + 1 not in above

    # -- anchors -----------------------------------------------------------

    def create_anchor(self, index: int, bias: str) -> Anchor:
        visible = self._visible()
        if not (0 <= index <= len(visible)):
            raise IndexOutOfRange(f"anchor at {index} in doc of length {len(visible)}")
        if bias == BEFORE:
            if index < len(visible):
                return Anchor(visible[index].id, BEFORE)
            if visible:  # end of document: stick to the last character
                return Anchor(visible[-1].id, AFTER)
            return Anchor(ROOT, BEFORE)
        if bias == AFTER:
            if index > 0:
                return Anchor(visible[index - 1].id, AFTER)
            return Anchor(ROOT, AFTER)
        raise ValueError(f"bad bias {bias!r}")

    def resolve_index(self, anchor: Anchor) -> int:
        if anchor.item is None:
            return 0
        if anchor.item not in self.items:
            raise UnknownItem(f"anchor item {anchor.item} never integrated")
        index = 0
        for item in self._walk():
            if item.id == anchor.item:
                if item.tombstone:
                    return index  # the gap the item would occupy
                return index + 1 if anchor.bias == AFTER else index
            if not item.tombstone:
                index += 1
        raise UnknownItem(f"anchor item {anchor.item} missing from walk")  # pragma: no cover

    def resolve_marks(self) -> list[dict]:
        """Marks projected to current indices, for rendering and tests."""
        out = []
        for span in self.marks.values():
            out.append(
                {
                    "start": self.resolve_index(span.start),
                    "end": self.resolve_index(span.end),
                    "key": span.key,
                    "value": span.value,
                }
            )
        out.sort(key=lambda m: (m["start"], m["end"], m["key"]))
        return out

    def mark_state(self) -> dict[tuple[Anchor, Anchor, str], tuple[str, tuple[int, int]]]:
        """Convergence-comparable view of the mark store."""
        return {slot: (span.value, span.stamp) for slot, span in self.marks.items()}

    # -- traversal ---------------------------------------------------------

    def _walk(self) -> Iterable[Item]:
        """All items (tombstones included) in document order, iteratively."""
        stack = list(reversed(self.children.get(None, ())))
        while stack:
            item = self.items[stack.pop()]
            yield item
            kids = self.children.get(item.id)
            if kids:
                stack.extend(reversed(kids))

    def _visible(self) -> list[Item]:
        return [item for item in self._walk() if not item.tombstone]


def new_doc(replica: int) -> Doc:
    if replica < 0:
        raise ValueError("replica must be non-negative")
    return Doc(replica=replica)
