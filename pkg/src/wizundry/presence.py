"""Ephemeral operator awareness: carets, selections, pointers, name flags.

Presence is deliberately kept out of the document and the event log — it
is a live overlay for the operators' screens, not part of the record.
Each actor's updates carry a monotone ``seq``; the store keeps the
highest-seq payload per actor and drops stragglers, so arrival order on
a lossy network cannot roll a cursor backwards.

Payloads expire ``PRESENCE_TTL_MS`` after their last update unless the
client heartbeats (every ``HEARTBEAT_INTERVAL_MS``), which bounds how
long a crashed operator's name flag lingers on everyone else's screen.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .crdt import Anchor, ItemId
from .errors import MalformedOp

PRESENCE_TTL_MS = 30_000
HEARTBEAT_INTERVAL_MS = 10_000


@dataclass(frozen=True)
class PresencePayload:
    actor_id: str
    display_name: str
    color: str
    seq: int
    expires_at: int  # ms timestamp
    caret: Optional[Anchor] = None
    selection: Optional[tuple[Anchor, Anchor]] = None
    pointer: Optional[tuple[int, int]] = None  # (line, column), document-relative

    def to_dict(self) -> dict:
        return {
            "actorId": self.actor_id,
            "displayName": self.display_name,
            "color": self.color,
            "seq": self.seq,
            "expiresAt": self.expires_at,
            "caret": _anchor_out(self.caret),
            "selection": (
                None
                if self.selection is None
                else [_anchor_out(self.selection[0]), _anchor_out(self.selection[1])]
            ),
            "pointer": None if self.pointer is None else list(self.pointer),
        }

    @staticmethod
    def from_dict(raw: dict) -> "PresencePayload":
        try:
            selection = raw.get("selection")
            pointer = raw.get("pointer")
            return PresencePayload(
                actor_id=str(raw["actorId"]),
                display_name=str(raw["displayName"]),
                color=str(raw["color"]),
                seq=int(raw["seq"]),
                expires_at=int(raw["expiresAt"]),
                caret=_anchor_in(raw.get("caret")),
                selection=(
                    None
                    if selection is None
                    else (_anchor_in(selection[0]), _anchor_in(selection[1]))
                ),
                pointer=None if pointer is None else (int(pointer[0]), int(pointer[1])),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedOp(f"bad presence payload: {exc}") from exc


def _anchor_out(anchor: Optional[Anchor]) -> Optional[dict]:
    if anchor is None:
        return None
    return {
        "item": None if anchor.item is None else list(anchor.item),
        "bias": anchor.bias,
    }


def _anchor_in(raw) -> Optional[Anchor]:
    if raw is None:
        return None
    item = raw["item"]
    return Anchor(
        item=None if item is None else ItemId(int(item[0]), int(item[1])),
        bias=str(raw["bias"]),
    )


class PresenceState:
    """Live payloads for one trial. Callers serialize on the trial queue."""

    def __init__(self, ttl_ms: int = PRESENCE_TTL_MS):
        self.ttl_ms = ttl_ms
        self._live: dict[str, PresencePayload] = {}
        self.stale_dropped = 0

    def update(self, payload: PresencePayload, now_ms: int) -> bool:
        """Store the payload unless it is older than what we already hold.

        Returns False (and counts the drop) for stale seq numbers.
        The stored copy gets a fresh TTL regardless of what the client
        claimed, so clocks only need to agree server-side.
        """
        current = self._live.get(payload.actor_id)
        if current is not None and payload.seq <= current.seq:
            self.stale_dropped += 1
            return False
        self._live[payload.actor_id] = replace(
            payload, expires_at=now_ms + self.ttl_ms
        )
        return True

    def expire(self, now_ms: int) -> list[str]:
        """Drop payloads past their TTL; returns the actor ids removed."""
        gone = [a for a, p in self._live.items() if p.expires_at < now_ms]
        for actor_id in gone:
            del self._live[actor_id]
        return gone

    def drop(self, actor_id: str) -> bool:
        """Explicit removal on disconnect."""
        return self._live.pop(actor_id, None) is not None

    def snapshot(self, now_ms: int) -> list[PresencePayload]:
        """Live payloads for catch-up, oldest actor id first; expired excluded."""
        return sorted(
            (p for p in self._live.values() if p.expires_at >= now_ms),
            key=lambda p: p.actor_id,
        )
