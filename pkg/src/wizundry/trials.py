"""Trial rooms: lifecycle, membership, and per-actor feature configuration.

A trial is one experiment room. Operators and the end user join with
role tokens; an admin decides, per actor, which capabilities their
client exposes (the landing-interface workflow: pick the feature mix,
then run the session). Trials are isolated — each owns its document,
annotation store, presence, speech state, and event log.

Lifecycle is strictly CREATED → RUNNING → CLOSED. A trial starts
RUNNING on the first join and never reopens once closed; deleting a
trial closes it but keeps the recorded log.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .auth import ADMIN, END_USER, WIZARD, Claims
from .errors import (
    DuplicateEndUser,
    EmptyName,
    Forbidden,
    MalformedOp,
    TrialClosed,
    UnknownActor,
    UnknownTrial,
)

CREATED = "CREATED"
RUNNING = "RUNNING"
CLOSED = "CLOSED"

COLLAB_EDITOR = "COLLAB_EDITOR"
MIC_CONTROL = "MIC_CONTROL"
SPEECH_BOXES = "SPEECH_BOXES"
CONTENT_PLAYBACK = "CONTENT_PLAYBACK"
LINE_BREAK = "LINE_BREAK"
PRESENCE_CURSORS = "PRESENCE_CURSORS"
LABELS = "LABELS"
HIGHLIGHTS = "HIGHLIGHTS"
SUMMARY_NOTES = "SUMMARY_NOTES"
BUBBLE_MENU = "BUBBLE_MENU"

ALL_FEATURES = frozenset({
    COLLAB_EDITOR, MIC_CONTROL, SPEECH_BOXES, CONTENT_PLAYBACK, LINE_BREAK,
    PRESENCE_CURSORS, LABELS, HIGHLIGHTS, SUMMARY_NOTES, BUBBLE_MENU,
})

# Features that only make sense with document access.
_NEEDS_EDITOR = frozenset({LABELS, HIGHLIGHTS, SUMMARY_NOTES})


def close_features(features: Iterable[str]) -> frozenset[str]:
    """Validate a feature set and apply the implication closure."""
    closed = set(features)
    unknown = closed - ALL_FEATURES
    if unknown:
        raise MalformedOp(f"unknown features: {sorted(unknown)}")
    if closed & _NEEDS_EDITOR:
        closed.add(COLLAB_EDITOR)
    return frozenset(closed)


@dataclass(frozen=True)
class Membership:
    actor_id: str
    user_id: str
    role: str
    display_name: str
    wizard_role_tag: Optional[str] = None  # e.g. "DW", "LW", "HSW"


@dataclass
class Trial:
    trial_id: str
    name: str
    created_at: int
    status: str = CREATED
    features: dict[str, frozenset[str]] = field(default_factory=dict)
    members: dict[str, Membership] = field(default_factory=dict)
    _next_replica: int = 1  # replica 0 belongs to the server's own writer

    def features_for(self, actor_id: str, role: str) -> frozenset[str]:
        """Configured set, or a role default when the admin set none.

        Operators default to the full palette (matching a study where
        every operator screen exposed everything); end users and admins
        default to pure observers.
        """
        configured = self.features.get(actor_id)
        if configured is not None:
            return configured
        return ALL_FEATURES if role == WIZARD else frozenset()

    def assign_replica(self) -> int:
        replica = self._next_replica
        self._next_replica += 1
        return replica


class TrialRegistry:
    """All trials on one server. Safe for concurrent admin/API calls."""

    def __init__(self):
        self._lock = threading.Lock()
        self._trials: dict[str, Trial] = {}
        self._serial = 0

    def create_trial(
        self,
        claims: Claims,
        name: str,
        feature_assignments: Optional[dict[str, Iterable[str]]] = None,
        now_ms: int = 0,
        trial_id: Optional[str] = None,
    ) -> Trial:
        _require(claims, ADMIN)
        if not name.strip():
            raise EmptyName("trial name must be non-empty")
        with self._lock:
            self._serial += 1
            tid = trial_id or f"trial-{self._serial}"
            if tid in self._trials:
                raise MalformedOp(f"trial id {tid!r} already exists")
            trial = Trial(trial_id=tid, name=name, created_at=now_ms)
            for actor_id, features in (feature_assignments or {}).items():
                trial.features[actor_id] = close_features(features)
            self._trials[tid] = trial
            return trial

    def list_trials(self, claims: Claims) -> list[Trial]:
        _require(claims, ADMIN)
        with self._lock:
            return sorted(self._trials.values(), key=lambda t: t.created_at)

    def get(self, trial_id: str) -> Trial:
        with self._lock:
            trial = self._trials.get(trial_id)
        if trial is None:
            raise UnknownTrial(f"no trial {trial_id!r}", trial_id=trial_id)
        return trial

    def delete_trial(self, claims: Claims, trial_id: str) -> Trial:
        """Close the trial. The recorded event log is retained."""
        _require(claims, ADMIN)
        trial = self.get(trial_id)
        trial.status = CLOSED
        return trial

    def join(
        self,
        trial_id: str,
        claims: Claims,
        display_name: Optional[str] = None,
        wizard_role_tag: Optional[str] = None,
    ) -> Membership:
        trial = self.get(trial_id)
        if trial.status == CLOSED:
            raise TrialClosed(f"trial {trial_id!r} is closed", trial_id=trial_id)
        actor_id = claims.user_id
        existing = trial.members.get(actor_id)
        if existing is not None:
            return existing  # reconnect keeps the original membership
        if claims.role == END_USER and any(
            m.role == END_USER for m in trial.members.values()
        ):
            raise DuplicateEndUser(
                f"trial {trial_id!r} already has its end user", trial_id=trial_id
            )
        membership = Membership(
            actor_id=actor_id,
            user_id=claims.user_id,
            role=claims.role,
            display_name=display_name or claims.user_id,
            wizard_role_tag=wizard_role_tag,
        )
        trial.members[actor_id] = membership
        if trial.status == CREATED:
            trial.status = RUNNING
        return membership

    def assign_features(
        self, claims: Claims, trial_id: str, actor_id: str, features: Iterable[str]
    ) -> frozenset[str]:
        _require(claims, ADMIN)
        trial = self.get(trial_id)
        if trial.status == CLOSED:
            raise TrialClosed(f"trial {trial_id!r} is closed", trial_id=trial_id)
        if actor_id not in trial.members and actor_id not in trial.features:
            raise UnknownActor(f"no actor {actor_id!r} in trial", actor_id=actor_id)
        closed = close_features(features)
        trial.features[actor_id] = closed
        return closed


def _require(claims: Claims, role: str) -> None:
    if claims.role != role:
        raise Forbidden(f"requires {role}, token is {claims.role}")
