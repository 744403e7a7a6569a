"""Labels, highlights, and summary notes attached to transcript ranges.

Annotations reference the document through :class:`~wizundry.crdt.Anchor`
pairs, so they stay glued to the characters they were created on while
other operators keep editing. The store itself is a two-phase set keyed
by annotation id: integrating the same record twice is a no-op, and a
removal wins over a late-arriving add, which keeps replicas set-equal
under any delivery order.

Label definitions are last-writer-wins per case-folded name so that two
operators defining "Question" concurrently end up with exactly one
surviving definition everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .crdt import Anchor, Doc
from .errors import (
    DuplicateLabel,
    EmptyName,
    EmptyNote,
    MalformedOp,
    RangeInverted,
    UnknownAnnotation,
    UnknownCategory,
    UnknownLabel,
)

LABEL = "LABEL"
HIGHLIGHT = "HIGHLIGHT"
NOTE = "NOTE"

DEFAULT_PALETTE = ("yellow", "green", "pink", "blue")


@dataclass(frozen=True)
class LabelDef:
    label_id: str
    name: str
    color: str
    created_by: str
    stamp: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "labelId": self.label_id,
            "name": self.name,
            "color": self.color,
            "createdBy": self.created_by,
            "stamp": list(self.stamp),
        }

    @staticmethod
    def from_dict(raw: dict) -> "LabelDef":
        try:
            return LabelDef(
                label_id=str(raw["labelId"]),
                name=str(raw["name"]),
                color=str(raw["color"]),
                created_by=str(raw["createdBy"]),
                stamp=(int(raw["stamp"][0]), int(raw["stamp"][1])),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedOp(f"bad label definition: {exc}") from exc


@dataclass(frozen=True)
class Annotation:
    anno_id: str
    kind: str  # LABEL | HIGHLIGHT | NOTE
    start: Anchor
    end: Anchor
    author: str
    stamp: tuple[int, int]
    label_id: Optional[str] = None
    category: Optional[str] = None
    note_text: Optional[str] = None

    def payload(self) -> dict:
        if self.kind == LABEL:
            return {"labelId": self.label_id}
        if self.kind == HIGHLIGHT:
            return {"category": self.category}
        return {"noteText": self.note_text}

    def to_dict(self) -> dict:
        return {
            "annoId": self.anno_id,
            "kind": self.kind,
            "start": _anchor_dict(self.start),
            "end": _anchor_dict(self.end),
            "author": self.author,
            "stamp": list(self.stamp),
            "labelId": self.label_id,
            "category": self.category,
            "noteText": self.note_text,
        }

    @staticmethod
    def from_dict(raw: dict) -> "Annotation":
        try:
            kind = raw["kind"]
            if kind not in (LABEL, HIGHLIGHT, NOTE):
                raise MalformedOp(f"unknown annotation kind {kind!r}")
            return Annotation(
                anno_id=str(raw["annoId"]),
                kind=kind,
                start=_anchor(raw["start"]),
                end=_anchor(raw["end"]),
                author=str(raw["author"]),
                stamp=(int(raw["stamp"][0]), int(raw["stamp"][1])),
                label_id=raw.get("labelId"),
                category=raw.get("category"),
                note_text=raw.get("noteText"),
            )
        except MalformedOp:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedOp(f"bad annotation: {exc}") from exc


def _anchor_dict(anchor: Anchor) -> dict:
    return {"item": None if anchor.item is None else list(anchor.item), "bias": anchor.bias}


def _anchor(raw: dict) -> Anchor:
    from .crdt import ItemId

    item = raw["item"]
    return Anchor(
        item=None if item is None else ItemId(int(item[0]), int(item[1])),
        bias=str(raw["bias"]),
    )


class AnnotationStore:
    """Per-trial store of label definitions and annotation records."""

    def __init__(self, palette: tuple[str, ...] = DEFAULT_PALETTE):
        self.palette = tuple(palette)
        self.labels: dict[str, LabelDef] = {}  # by label_id
        self.annotations: dict[str, Annotation] = {}  # by anno_id
        self._removed: set[str] = set()

    # -- labels -----------------------------------------------------------

    def define_label(
        self, name: str, color: str, created_by: str, stamp: tuple[int, int],
        label_id: Optional[str] = None,
    ) -> LabelDef:
        if not name.strip():
            raise EmptyName("label name must be non-empty")
        folded = name.casefold()
        for existing in self.labels.values():
            if existing.name.casefold() == folded:
                raise DuplicateLabel(f"label {name!r} already defined", name=name)
        label = LabelDef(
            label_id=label_id or f"label-{stamp[1]}-{stamp[0]}",
            name=name,
            color=color,
            created_by=created_by,
            stamp=stamp,
        )
        self.labels[label.label_id] = label
        return label

    def integrate_label(self, label: LabelDef) -> bool:
        """Merge a replicated definition; greatest stamp wins per name.

        Returns True when ``label`` is the live definition afterwards.
        """
        folded = label.name.casefold()
        for existing in list(self.labels.values()):
            if existing.name.casefold() != folded:
                continue
            if existing.label_id == label.label_id:
                return True
            if label.stamp > existing.stamp:
                del self.labels[existing.label_id]
                break
            return False
        self.labels[label.label_id] = label
        return True

    # -- annotations --------------------------------------------------------

    def apply_label(
        self, doc: Doc, start: Anchor, end: Anchor, label_id: str,
        author: str, stamp: tuple[int, int], anno_id: Optional[str] = None,
    ) -> Annotation:
        if label_id not in self.labels:
            raise UnknownLabel(f"no label {label_id!r}", label_id=label_id)
        self._check_range(doc, start, end)
        return self._put(Annotation(
            anno_id=anno_id or self._mint_id(stamp),
            kind=LABEL, start=start, end=end,
            author=author, stamp=stamp, label_id=label_id,
        ))

    def add_highlight(
        self, doc: Doc, start: Anchor, end: Anchor, category: str,
        author: str, stamp: tuple[int, int], anno_id: Optional[str] = None,
    ) -> Annotation:
        if category not in self.palette:
            raise UnknownCategory(
                f"category {category!r} not in palette", category=category
            )
        self._check_range(doc, start, end)
        # Mirror the highlight into the document's own mark store so plain
        # document renderers see the colouring without the annotation list.
        doc.set_mark(start, end, "highlight", category)
        return self._put(Annotation(
            anno_id=anno_id or self._mint_id(stamp),
            kind=HIGHLIGHT, start=start, end=end,
            author=author, stamp=stamp, category=category,
        ))

    def add_note(
        self, doc: Doc, start: Anchor, end: Anchor, note_text: str,
        author: str, stamp: tuple[int, int], anno_id: Optional[str] = None,
    ) -> Annotation:
        if not note_text.strip():
            raise EmptyNote("note text must be non-empty")
        self._check_range(doc, start, end)
        return self._put(Annotation(
            anno_id=anno_id or self._mint_id(stamp),
            kind=NOTE, start=start, end=end,
            author=author, stamp=stamp, note_text=note_text,
        ))

    def delete_note(self, anno_id: str) -> Annotation:
        record = self.annotations.get(anno_id)
        if record is None or record.kind != NOTE:
            raise UnknownAnnotation(f"no note {anno_id!r}", anno_id=anno_id)
        self.remove(anno_id)
        return record

    def integrate(self, annotation: Annotation) -> bool:
        """Idempotent replicated add; removed ids never resurrect."""
        if annotation.anno_id in self._removed:
            return False
        if annotation.anno_id in self.annotations:
            return False
        self.annotations[annotation.anno_id] = annotation
        return True

    def remove(self, anno_id: str) -> None:
        self._removed.add(anno_id)
        self.annotations.pop(anno_id, None)

    def notes_in_order(self, doc: Doc) -> list[Annotation]:
        """NOTE records sorted the way the side working area shows them."""
        notes = [a for a in self.annotations.values() if a.kind == NOTE]
        notes.sort(key=lambda a: (doc.resolve_index(a.start), a.anno_id))
        return notes

    def state(self) -> tuple:
        """Convergence-comparable view (labels + live annotations)."""
        return (
            frozenset(self.labels.values()),
            frozenset(self.annotations.values()),
        )

    def _put(self, annotation: Annotation) -> Annotation:
        self.annotations[annotation.anno_id] = annotation
        return annotation

    def _check_range(self, doc: Doc, start: Anchor, end: Anchor) -> None:
        if doc.resolve_index(start) > doc.resolve_index(end):
            raise RangeInverted("annotation range inverted")

    @staticmethod
    def _mint_id(stamp: tuple[int, int]) -> str:
        return f"anno-{stamp[1]}-{stamp[0]}"


def resolve_annotations(doc: Doc, annotations) -> list[dict]:
    """Project annotation records onto current document indices.

    Pure: neither the document nor the records are modified. Output is
    sorted by (startIndex, annoId) so renderers get a stable order.
    """
    out = []
    for record in annotations:
        out.append({
            "annoId": record.anno_id,
            "kind": record.kind,
            "startIndex": doc.resolve_index(record.start),
            "endIndex": doc.resolve_index(record.end),
            "payload": record.payload(),
        })
    out.sort(key=lambda row: (row["startIndex"], row["annoId"]))
    return out
