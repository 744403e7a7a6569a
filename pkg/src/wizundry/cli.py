"""Command line: run the server, or crunch recorded data offline.

    wizundry serve --config server.json
    wizundry analytics tlx scores.csv [--json]
    wizundry analytics usage trial.log.csv [--json]
"""

from __future__ import annotations

import argparse
import json
import sys

from .analytics import (
    SUBSCALES,
    feature_usage,
    read_scores_csv,
    tlx_group_stats,
    tlx_row_stats,
)
from .config import load_config
from .errors import WizundryError
from .eventlog import import_csv


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except WizundryError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wizundry",
        description="Multi-operator dictation study server and analysis tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve_cmd = sub.add_parser("serve", help="run the study server")
    serve_cmd.add_argument("--config", required=True, metavar="PATH",
                           help="JSON server configuration")
    serve_cmd.set_defaults(run=_run_serve)

    analytics = sub.add_parser("analytics", help="offline analysis of recorded data")
    asub = analytics.add_subparsers(dest="analysis", required=True)

    tlx_cmd = asub.add_parser("tlx", help="workload scores: per-row and group statistics")
    tlx_cmd.add_argument("scores", metavar="SCORES_CSV")
    tlx_cmd.add_argument("--json", action="store_true", help="machine-readable output")
    tlx_cmd.set_defaults(run=_run_tlx)

    usage_cmd = asub.add_parser("usage", help="operation counts per actor from a trial log")
    usage_cmd.add_argument("log", metavar="LOG_CSV")
    usage_cmd.add_argument("--json", action="store_true", help="machine-readable output")
    usage_cmd.set_defaults(run=_run_usage)

    return parser


def _run_serve(args) -> int:
    from .server import serve

    config = load_config(args.config)
    serve(config)
    return 0


def _run_tlx(args) -> int:
    with open(args.scores, "rb") as fh:
        records = read_scores_csv(fh.read())
    group = tlx_group_stats(records)
    if args.json:
        out = {
            "rows": [
                {"participantId": r.participant_id, **_row_dict(tlx_row_stats(r))}
                for r in records
            ],
            "group": {
                "meanOfSums": group.mean_of_sums,
                "sdOfSums": group.sd_of_sums,
                "medianOfSums": group.median_of_sums,
                "iqrOfSums": group.iqr_of_sums,
                "meanOfMeans": group.mean_of_means,
            },
        }
        print(json.dumps(out, indent=2, sort_keys=True))
        return 0
    header = f"{'participant':<14}{'sum':>7}{'mean':>8}{'sd':>8}{'median':>8}{'iqr':>7}"
    print(header)
    print("-" * len(header))
    for record in records:
        stats = tlx_row_stats(record)
        print(f"{record.participant_id:<14}{stats.sum:>7.0f}{stats.mean:>8.2f}"
              f"{stats.sample_sd:>8.2f}{stats.median:>8.2f}{stats.iqr:>7.2f}")
    print("-" * len(header))
    print(f"n={len(records)}  subscales={','.join(SUBSCALES)}")
    print(f"mean of sums   {group.mean_of_sums:.2f} (sd {group.sd_of_sums:.2f})")
    print(f"median of sums {group.median_of_sums:.2f} (iqr {group.iqr_of_sums:.2f})")
    print(f"mean of means  {group.mean_of_means:.2f}")
    return 0


def _row_dict(stats) -> dict:
    return {
        "sum": stats.sum,
        "mean": stats.mean,
        "sampleSd": stats.sample_sd,
        "median": stats.median,
        "iqr": stats.iqr,
    }


def _run_usage(args) -> int:
    with open(args.log, "rb") as fh:
        events = import_csv(fh.read())
    counts = feature_usage(events)
    if args.json:
        out = [
            {"actorId": actor, "trialId": trial, "operations": dict(ops)}
            for (actor, trial), ops in counts.items()
        ]
        print(json.dumps(out, indent=2, sort_keys=True))
        return 0
    if not counts:
        print("no operations recorded")
        return 0
    for (actor, trial), ops in counts.items():
        total = sum(ops.values())
        print(f"{actor} @ {trial}: {total} operation(s)")
        for op_type, count in sorted(ops.items()):
            print(f"  {op_type:<20}{count:>6}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
