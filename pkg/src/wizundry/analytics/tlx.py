"""NASA-TLX workload statistics.

Works on raw six-subscale responses (1–10 each). Row statistics follow
the usual conventions exactly once, stated here so every number in the
suite is deterministic: sample standard deviation uses the n−1
denominator, and median/IQR use linear interpolation on sorted values
(the "inclusive" quantile convention).
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass

from ..errors import EmptyInput, InvalidScale

SUBSCALES = ("mental", "physical", "temporal", "performance", "effort", "frustration")
CSV_COLUMNS = ("participant_id",) + SUBSCALES

SCALE_MIN = 1
SCALE_MAX = 10


@dataclass(frozen=True)
class TlxRecord:
    participant_id: str
    scores: tuple[int, int, int, int, int, int]

    def __post_init__(self):
        if len(self.scores) != len(SUBSCALES):
            raise InvalidScale(f"need {len(SUBSCALES)} subscale scores, got {len(self.scores)}")
        for value in self.scores:
            if not isinstance(value, int) or not (SCALE_MIN <= value <= SCALE_MAX):
                raise InvalidScale(f"score {value!r} outside {SCALE_MIN}..{SCALE_MAX}")


@dataclass(frozen=True)
class TlxRowStats:
    sum: int
    mean: float
    sample_sd: float
    median: float
    iqr: float


@dataclass(frozen=True)
class TlxGroupStats:
    mean_of_sums: float
    sd_of_sums: float
    median_of_sums: float
    iqr_of_sums: float
    mean_of_means: float


def tlx_row_stats(record: TlxRecord) -> TlxRowStats:
    values = list(record.scores)
    return TlxRowStats(
        sum=sum(values),
        mean=sum(values) / len(values),
        sample_sd=statistics.stdev(values),
        median=statistics.median(values),
        iqr=_iqr(values),
    )

def tlx_group_stats(records) -> TlxGroupStats:
    records = list(records)
    if not records:
        raise EmptyInput("no TLX records")
    sums = [sum(r.scores) for r in records]
    means = [sum(r.scores) / len(r.scores) for r in records]
    return TlxGroupStats(
        mean_of_sums=statistics.mean(sums),
        sd_of_sums=statistics.stdev(sums) if len(sums) > 1 else 0.0,
        median_of_sums=statistics.median(sums),
        iqr_of_sums=_iqr(sums) if len(sums) > 1 else 0.0,
        mean_of_means=statistics.mean(means),
    )


def _iqr(values) -> float:
    q1, _, q3 = statistics.quantiles(values, n=4, method="inclusive")
    return q3 - q1


def read_scores_csv(data: bytes) -> list[TlxRecord]:
    """Parse `participant_id,mental,...,frustration` rows."""
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("empty scores file") from None
    if tuple(header) != CSV_COLUMNS:
        raise InvalidScale(f"unexpected columns {header!r}")
    records = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise InvalidScale(f"row {reader.line_num} has {len(row)} fields")
        try:
            scores = tuple(int(v) for v in row[1:])
        except ValueError as exc:
            raise InvalidScale(f"row {reader.line_num}: {exc}") from exc
        records.append(TlxRecord(participant_id=row[0], scores=scores))
    if not records:
        raise EmptyInput("no score rows")
    return records


def write_scores_csv(records) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow([record.participant_id, *record.scores])
    return buffer.getvalue().encode("utf-8")
