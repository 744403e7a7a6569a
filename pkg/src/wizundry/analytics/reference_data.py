"""Bundled workload-study tables used by the analytics test suites.

Each row keeps the raw six subscale responses *and* the summary columns
as printed in the source tables. The printed columns are retained on
purpose: several of them are internally inconsistent with the raw
scores (sums that do not add up, per-row deviations matching no
standard formula), and the discrepancy tests pin those down so nobody
"fixes" the data silently. Recompute from ``scores`` when you need
numbers that add up; read ``printed_*`` when you need what the source
reported.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

from .tlx import TlxRecord


@dataclass(frozen=True)
class ReferenceRow:
    participant_id: str
    scores: tuple[int, int, int, int, int, int]
    printed_sum: int
    printed_mean: float
    printed_sd: float
    printed_iqr: float

    def record(self) -> TlxRecord:
        return TlxRecord(participant_id=self.participant_id, scores=self.scores)


def _row(pid, m, p, t, perf, e, f, s, mean, sd, iqr):
    return ReferenceRow(str(pid), (m, p, t, perf, e, f), s, mean, sd, iqr)


# First-study operator responses (dyads; one row per operator).
STUDY1_WIZARDS = (
    _row(1, 9, 7, 8, 5, 8, 8, 45, 7.5, 2.5, 4.0),
    _row(2, 7, 3, 2, 6, 7, 1, 26, 4.3, 2.1, 1.8),
    _row(3, 10, 1, 8, 4, 10, 8, 41, 6.8, 2.2, 2.3),
    _row(4, 7, 2, 4, 4, 7, 4, 28, 4.7, 2.1, 4.8),
    _row(5, 7, 8, 3, 9, 6, 3, 36, 6.0, 1.4, 2.0),
    _row(6, 4, 3, 4, 7, 6, 2, 26, 4.3, 0.4, 1.0),
    _row(7, 5, 5, 5, 5, 6, 5, 31, 5.2, 2.6, 4.5),
    _row(8, 5, 6, 6, 4, 5, 5, 31, 5.2, 1.8, 2.8),
    _row(9, 4, 4, 5, 7, 3, 1, 24, 4.0, 1.0, 1.8),
    _row(10, 7, 6, 7, 7, 7, 6, 40, 6.7, 2.5, 3.8),
    _row(11, 5, 3, 6, 9, 5, 3, 31, 5.2, 1.0, 1.5),
    _row(12, 6, 3, 5, 1, 5, 4, 24, 4.0, 2.7, 6.8),
)

# Second-study operator responses (triads).
STUDY2_WIZARDS = (
    _row(1, 2, 1, 1, 6, 2, 2, 14, 1.3, 1.7, 1.0),
    _row(2, 2, 1, 3, 5, 3, 3, 17, 2.7, 1.5, 1.5),
    _row(3, 6, 3, 3, 4, 5, 5, 27, 4.6, 1.2, 2.0),
    _row(4, 9, 2, 6, 5, 7, 6, 36, 6.0, 2.2, 2.4),
    _row(5, 6, 5, 8, 4, 6, 4, 33, 5.5, 1.5, 2.2),
    _row(6, 8, 7, 10, 1, 4, 2, 32, 5.3, 3.3, 5.5),
    _row(7, 8, 1, 8, 4, 7, 3, 33, 5.4, 3.0, 5.1),
    _row(8, 9, 1, 8, 2, 8, 5, 33, 5.5, 3.3, 6.6),
    _row(9, 6, 6, 7, 2, 7, 3, 30, 5.1, 2.3, 4.1),
    _row(10, 7, 3, 9, 3, 9, 7, 39, 6.5, 2.7, 6.0),
    _row(11, 6, 2, 7, 7, 7, 5, 34, 5.6, 1.8, 1.6),
    _row(12, 7, 2, 6, 5, 6, 1, 27, 4.5, 2.2, 3.6),
)

# Second-study end-user responses (one per group × trial).
STUDY2_ENDUSERS = (
    _row("G1T1", 7, 2, 8, 6, 6, 6, 35, 5.4, 2.1, 1.0),
    _row("G1T2", 8, 3, 8, 2, 7, 9, 37, 5.9, 2.9, 5.5),
    _row("G2T1", 9, 3, 9, 3, 7, 8, 39, 6.3, 3.0, 6.0),
    _row("G2T2", 8, 2, 8, 2, 7, 9, 36, 5.8, 3.1, 6.0),
    _row("G3T1", 7, 2, 8, 3, 6, 7, 33, 5.3, 2.6, 4.5),
    _row("G3T2", 7, 2, 6, 4, 5, 7, 31, 4.8, 1.9, 2.5),
    _row("G4T1", 8, 2, 7, 4, 6, 8, 36, 5.5, 2.5, 4.0),
    _row("G4T2", 6, 2, 5, 6, 5, 6, 30, 4.7, 1.6, 5.0),
)

# Aggregates as reported in the source's findings prose.
REPORTED_AGGREGATES = {
    "study1_wizards": {
        "meanOfSums": 31.9, "sdOfSums": 7.1, "medianOfSums": 31,
        "iqrOfSums": 19, "meanOfMeans": 5.3,
    },
    "study2_wizards": {
        "meanOfSums": 29.4, "sdOfSums": 7.4, "medianOfSums": 32,
        "iqrOfSums": 6.0, "meanOfMeans": 4.9,
    },
    "study2_endusers": {
        "meanOfSums": 32.7, "sdOfSums": 3.2, "medianOfSums": 32.8,
        "iqrOfSums": 4.8, "meanOfMeans": 5.5, "sdOfMeans": 0.5,
        "medianOfMeans": 5.5, "iqrOfMeans": 0.8,
    },
}

TABLES = {
    "study1_wizards": STUDY1_WIZARDS,
    "study2_wizards": STUDY2_WIZARDS,
    "study2_endusers": STUDY2_ENDUSERS,
}


def records(table_name: str) -> list[TlxRecord]:
    return [row.record() for row in TABLES[table_name]]


def load_bundled_csv(table_name: str) -> bytes:
    """Raw bytes of the shipped scores CSV for a table."""
    resource = importlib.resources.files(__package__) / "data" / f"{table_name}.csv"
    return resource.read_bytes()
