"""Command-line entry points."""

import json
import socket

import pytest

from wizundry.analytics.reference_data import load_bundled_csv
from wizundry.auth import ADMIN
from wizundry.cli import main
from wizundry.clock import ManualClock
from wizundry.errors import BindFailed
from wizundry.eventlog import EventLog


@pytest.fixture
def scores_csv(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_bytes(load_bundled_csv("study1_wizards"))
    return str(path)


@pytest.fixture
def log_csv(tmp_path):
    log = EventLog("trial-7", clock=ManualClock(start_ms=5))
    log.append("w1", "WIZARD", "DOC_INSERT", {"index": 0, "length": 2, "ops": []})
    log.append("w1", "WIZARD", "DOC_INSERT", {"index": 2, "length": 1, "ops": []})
    log.append("w2", "WIZARD", "MIC_SET", {"on": True})
    log.append("w1", "WIZARD", "LEAVE", {})
    path = tmp_path / "trial.log.csv"
    path.write_bytes(log.export_csv())
    return str(path)


class TestTlxCommand:
    def test_text_report(self, scores_csv, capsys):
        assert main(["analytics", "tlx", scores_csv]) == 0
        out = capsys.readouterr().out
        assert "mean of sums   31.92" in out
        assert "median of sums 31.00" in out
        assert "n=12" in out

    def test_json_report(self, scores_csv, capsys):
        assert main(["analytics", "tlx", scores_csv, "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["rows"]) == 12
        assert data["rows"][0]["sum"] == 45.0
        assert data["group"]["medianOfSums"] == 31.0

    def test_bad_scores_file(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("nope\n")
        assert main(["analytics", "tlx", str(path)]) == 2
        assert "error" in capsys.readouterr().err


class TestUsageCommand:
    def test_text_report_counts_operations_only(self, log_csv, capsys):
        assert main(["analytics", "usage", log_csv]) == 0
        out = capsys.readouterr().out
        assert "w1 @ trial-7: 2 operation(s)" in out
        assert "DOC_INSERT" in out
        assert "LEAVE" not in out  # ambient rows are not operations

    def test_json_report(self, log_csv, capsys):
        assert main(["analytics", "usage", log_csv, "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        by_actor = {row["actorId"]: row["operations"] for row in data}
        assert by_actor["w1"] == {"DOC_INSERT": 2}
        assert by_actor["w2"] == {"MIC_SET": 1}

    def test_empty_log(self, tmp_path, capsys):
        log = EventLog("trial-0", clock=ManualClock())
        path = tmp_path / "empty.log.csv"
        path.write_bytes(log.export_csv())
        assert main(["analytics", "usage", str(path)]) == 0
        assert "no operations" in capsys.readouterr().out


class TestServeCommand:
    def test_invalid_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "server.json"
        path.write_text(json.dumps({"users": []}))  # no secret anywhere
        assert main(["serve", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "CONFIG_INVALID" in err
        assert "secret" in err

    def test_bind_failure_reported(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("WIZUNDRY_SECRET", raising=False)
        blocker = socket.create_server(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        path = tmp_path / "server.json"
        path.write_text(json.dumps({
            "secret": "s", "listenAddress": f"127.0.0.1:{port}",
        }))
        try:
            assert main(["serve", "--config", str(path)]) == 2
            assert "BIND_FAILED" in capsys.readouterr().err
        finally:
            blocker.close()

    def test_bind_failed_raises_from_serve(self, tmp_path):
        from wizundry.config import ServerConfig
        from wizundry.server import serve

        blocker = socket.create_server(("127.0.0.1", 0))
        port = blocker.getsockname()[1]
        try:
            with pytest.raises(BindFailed):
                serve(ServerConfig(listen_address=f"127.0.0.1:{port}", secret="s"))
        finally:
            blocker.close()


class TestParser:
    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_prog_name(self, capsys):
        with pytest.raises(SystemExit):
            main(["--help"])
        assert "wizundry" in capsys.readouterr().out
