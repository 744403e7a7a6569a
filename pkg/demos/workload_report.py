"""Workload statistics over the bundled reference tables.

Prints per-respondent and group NASA-TLX style statistics for the three
tables that ship with the package, the same numbers exposed by
``wizundry analytics tlx``. Run with::

    python3 demos/workload_report.py
"""

from wizundry.analytics import tlx_group_stats, tlx_row_stats
from wizundry.analytics.reference_data import TABLES

TITLES = {
    "study1_wizards": "First study — operators (dyads)",
    "study2_wizards": "Second study — operators (triads)",
    "study2_endusers": "Second study — participants",
}


def main():
    for name, rows in TABLES.items():
        records = [row.record() for row in rows]
        group = tlx_group_stats(records)
        print(f"\n{TITLES[name]}  (n={len(records)})")
        print(f"  {'respondent':<12} {'sum':>5} {'mean':>6} {'sd':>6} {'iqr':>6}")
        for record in records:
            stats = tlx_row_stats(record)
            print(f"  {record.participant_id:<12} {stats.sum:>5} "
                  f"{stats.mean:>6.2f} {stats.sample_sd:>6.2f} {stats.iqr:>6.2f}")
        print(f"  group: mean of sums {group.mean_of_sums:.2f} "
              f"(sd {group.sd_of_sums:.2f}), median {group.median_of_sums:.1f} "
              f"(iqr {group.iqr_of_sums:.1f}), mean of means {group.mean_of_means:.2f}")


if __name__ == "__main__":
    main()
