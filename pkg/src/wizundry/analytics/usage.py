"""Feature-usage counts from trial logs.

Answers "how many times did each participant use each feature in each
trial" — the per-operator operation tallies used to compare working
styles across sessions. Counts come straight from the event records,
so a report over an exported-and-reimported CSV is identical to one
over the live log.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Optional

from ..eventlog import LogEvent

# Rows that represent deliberate participant operations. Ambient rows
# (joins, trial lifecycle, errors) stay out of usage tallies.
OPERATION_TYPES = frozenset({
    "DOC_INSERT", "DOC_DELETE", "DOC_MARK", "MIC_SET", "SPEECH_BOX_UPSERT",
    "SPEECH_PLAY", "PLAYBACK_TOGGLE", "TRANSCRIPT_COMMIT", "LABEL_DEF",
    "ANNOTATION_ADD", "ANNOTATION_DELETE",
})

UsageReport = dict[tuple[str, str], dict[str, int]]


def feature_usage(
    events: Iterable[LogEvent], trial_id: Optional[str] = None
) -> UsageReport:
    """Tally operation rows per (actor, trial).

    ``trial_id`` narrows the report to one trial; resolving whether a
    trial exists at all is the caller's business (a valid trial can
    have an empty log, which yields an empty report).
    """
    counters: dict[tuple[str, str], Counter] = {}
    for event in events:
        if trial_id is not None and event.trial_id != trial_id:
            continue
        if event.event_type not in OPERATION_TYPES:
            continue
        key = (event.actor_id, event.trial_id)
        counters.setdefault(key, Counter())[event.event_type] += 1
    return {key: dict(counter) for key, counter in sorted(counters.items())}
