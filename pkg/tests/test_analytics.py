"""Workload statistics and usage reports.

Row-stat expectations were frozen from an independent oracle (numpy
percentile/linear and a hand-rolled n−1 deviation) before wiring them
here, so the implementation under test never generated its own
expected values.
"""

from __future__ import annotations

import statistics

import pytest

from wizundry.analytics import (
    TlxRecord,
    feature_usage,
    read_scores_csv,
    tlx_group_stats,
    tlx_row_stats,
    write_scores_csv,
)
from wizundry.analytics.reference_data import (
    REPORTED_AGGREGATES,
    STUDY1_WIZARDS,
    STUDY2_ENDUSERS,
    STUDY2_WIZARDS,
    load_bundled_csv,
    records,
)
from wizundry.clock import ManualClock
from wizundry.errors import EmptyInput, InvalidScale
from wizundry.eventlog import EventLog, import_csv
from wizundry.auth import WIZARD


class TestRowStats:
    def test_first_reference_row(self):
        stats = tlx_row_stats(TlxRecord("1", (9, 7, 8, 5, 8, 8)))
        assert stats.sum == 45
        assert stats.mean == 7.5
        assert stats.sample_sd == pytest.approx(1.378404875209022)
        assert stats.median == 8.0
        assert stats.iqr == pytest.approx(0.75)

    def test_second_reference_row(self):
        stats = tlx_row_stats(TlxRecord("2", (7, 3, 2, 6, 7, 1)))
        assert stats.sum == 26
        assert round(stats.mean, 1) == 4.3
        assert stats.sample_sd == pytest.approx(2.6583202716502514)
        assert stats.median == 4.5
        assert stats.iqr == pytest.approx(4.5)

    def test_row_six_oracle(self):
        stats = tlx_row_stats(TlxRecord("6", (4, 3, 4, 7, 6, 2)))
        assert stats.sample_sd == pytest.approx(1.8618986725025255)
        assert stats.iqr == pytest.approx(2.25)

    def test_scale_validation(self):
        with pytest.raises(InvalidScale):
            TlxRecord("x", (0, 5, 5, 5, 5, 5))
        with pytest.raises(InvalidScale):
            TlxRecord("x", (11, 5, 5, 5, 5, 5))
        with pytest.raises(InvalidScale):
            TlxRecord("x", (5, 5, 5, 5, 5))


class TestGroupStats:
    def test_study1_aggregates(self):
        stats = tlx_group_stats(records("study1_wizards"))
        assert stats.mean_of_sums == pytest.approx(31.916666666666668)
        assert stats.sd_of_sums == pytest.approx(7.064100448855124)
        assert stats.median_of_sums == 31
        assert stats.iqr_of_sums == pytest.approx(11.0)
        assert stats.mean_of_means == pytest.approx(5.319444444444444)

    def test_single_record(self):
        stats = tlx_group_stats([TlxRecord("1", (9, 7, 8, 5, 8, 8))])
        assert stats.mean_of_sums == 45
        assert stats.sd_of_sums == 0.0
        assert stats.median_of_sums == 45

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            tlx_group_stats([])


class TestReferenceTables:
    def test_study1_rows_internally_consistent(self):
        for row in STUDY1_WIZARDS:
            stats = tlx_row_stats(row.record())
            assert stats.sum == row.printed_sum
            assert round(stats.mean, 1) == round(row.printed_mean, 1)

    def test_bundled_csvs_match_reference_rows(self):
        for name in ("study1_wizards", "study2_wizards", "study2_endusers"):
            parsed = read_scores_csv(load_bundled_csv(name))
            assert parsed == records(name)

    def test_csv_round_trip(self):
        rows = records("study2_endusers")
        assert read_scores_csv(write_scores_csv(rows)) == rows


class TestReportedDiscrepancies:
    """The source tables disagree with themselves in specific, known ways.

    These assertions pin each divergence so a silent 'correction' of the
    bundled data or the statistics code shows up as a test failure.
    """

    def test_study1_printed_deviation_columns_do_not_match_any_standard_formula(self):
        # e.g. first row prints 2.5 where sample SD is 1.378 and population
        # SD is 1.258 — neither rounds to the printed value.
        row = STUDY1_WIZARDS[0]
        sample_sd = tlx_row_stats(row.record()).sample_sd
        population_sd = statistics.pstdev(row.scores)
        assert row.printed_sd == 2.5
        assert round(sample_sd, 1) != row.printed_sd
        assert round(population_sd, 1) != row.printed_sd

    def test_study1_printed_iqr_differs_from_recomputed(self):
        stats = tlx_group_stats(records("study1_wizards"))
        assert REPORTED_AGGREGATES["study1_wizards"]["iqrOfSums"] == 19
        assert stats.iqr_of_sums == pytest.approx(11.0)  # not 19

    def test_study2_wizard_rows_with_sums_that_do_not_add_up(self):
        mismatched = {
            row.participant_id
            for row in STUDY2_WIZARDS
            if sum(row.scores) != row.printed_sum
        }
        assert mismatched == {"3", "4", "7", "9", "10"}

    def test_study2_wizard_aggregate_straddles_both_sum_columns(self):
        raw = tlx_group_stats(records("study2_wizards"))
        printed_sums_mean = statistics.mean(r.printed_sum for r in STUDY2_WIZARDS)
        assert raw.mean_of_sums == pytest.approx(29.25)
        assert printed_sums_mean == pytest.approx(29.583333333333332)
        reported = REPORTED_AGGREGATES["study2_wizards"]["meanOfSums"]
        assert abs(raw.mean_of_sums - reported) <= 0.2
        assert abs(printed_sums_mean - reported) <= 0.2

    def test_study2_enduser_sum_mismatch_is_exactly_one_row(self):
        mismatched = {
            row.participant_id
            for row in STUDY2_ENDUSERS
            if sum(row.scores) != row.printed_sum
        }
        assert mismatched == {"G4T1"}

    def test_study2_enduser_reported_sum_aggregate_matches_neither_column(self):
        raw = tlx_group_stats(records("study2_endusers"))
        printed_sums_mean = statistics.mean(r.printed_sum for r in STUDY2_ENDUSERS)
        reported = REPORTED_AGGREGATES["study2_endusers"]["meanOfSums"]
        assert reported == 32.7
        assert raw.mean_of_sums == pytest.approx(34.5)
        assert printed_sums_mean == pytest.approx(34.625)
        assert abs(raw.mean_of_sums - reported) > 1.5
        assert abs(printed_sums_mean - reported) > 1.5

    def test_study2_enduser_mean_score_traces_to_printed_means_column(self):
        # The reported "mean score of 5.5 (SD=0.5)" is reachable only by
        # averaging the table's rounded per-row means; raw scores give 5.75.
        raw = tlx_group_stats(records("study2_endusers"))
        printed_means = [r.printed_mean for r in STUDY2_ENDUSERS]
        assert raw.mean_of_means == pytest.approx(5.75)
        assert abs(raw.mean_of_means - 5.5) > 0.1
        assert statistics.mean(printed_means) == pytest.approx(5.4625)
        assert abs(statistics.mean(printed_means) - 5.5) <= 0.1
        assert statistics.stdev(printed_means) == pytest.approx(0.5423164600647328)


class TestFeatureUsage:
    def scripted_log(self):
        log = EventLog("trial-7", clock=ManualClock(0))
        log.append("W1", WIZARD, "JOIN", {})
        for on in (True, False, True):
            log.append("W1", WIZARD, "MIC_SET", {"on": on})
        log.append("W2", WIZARD, "SPEECH_PLAY", {"boxId": "b1", "text": "hi", "queued": False})
        log.append("W2", WIZARD, "SPEECH_PLAY", {"boxId": "b1", "text": "hi", "queued": False})
        log.append("W1", WIZARD, "LEAVE", {})
        return log

    def test_scripted_counts(self):
        report = feature_usage(self.scripted_log().events())
        assert report[("W1", "trial-7")] == {"MIC_SET": 3}
        assert report[("W2", "trial-7")] == {"SPEECH_PLAY": 2}

    def test_empty_log(self):
        assert feature_usage([]) == {}

    def test_counts_survive_csv_round_trip(self):
        log = self.scripted_log()
        direct = feature_usage(log.events())
        round_tripped = feature_usage(import_csv(log.export_csv()))
        assert direct == round_tripped

    def test_counts_equal_query_cardinalities(self):
        log = self.scripted_log()
        report = feature_usage(log.events())
        for (actor, _), counts in report.items():
            for event_type, count in counts.items():
                assert count == len(log.query(actor_id=actor, event_type=event_type))

    def test_trial_filter(self):
        log = self.scripted_log()
        assert feature_usage(log.events(), trial_id="other") == {}
