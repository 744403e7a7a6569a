from .tlx import (
    CSV_COLUMNS,
    SUBSCALES,
    TlxGroupStats,
    TlxRecord,
    TlxRowStats,
    read_scores_csv,
    tlx_group_stats,
    tlx_row_stats,
    write_scores_csv,
)
from .usage import OPERATION_TYPES, UsageReport, feature_usage

__all__ = [
    "CSV_COLUMNS", "SUBSCALES", "TlxGroupStats", "TlxRecord", "TlxRowStats",
    "read_scores_csv", "tlx_group_stats", "tlx_row_stats", "write_scores_csv",
    "OPERATION_TYPES", "UsageReport", "feature_usage",
]
