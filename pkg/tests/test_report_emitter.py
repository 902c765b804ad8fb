"""
Tests for report output.
"""

import json

import pytest

from config.settings import OutputSettings
from core.data_models import ExperimentRecord
from core.exceptions import ReportError
from services.report_emitter import CSV_HEADER, ReportEmitter, emit_report, formula_for, summarize


@pytest.fixture
def records():
    """A small mixed set of records, deliberately out of order."""
    return [
        ExperimentRecord.check("w2-rate", 4, 0.01, 0.05, measure="uniform", runtime_ms=12),
        ExperimentRecord.check("monotonicity", 4, 0.05, 0.1, m=2, measure="uniform"),
        ExperimentRecord(label="rio-asymptotic", n=16, measured=0.7, bound=0.66, passed=False,
                         informational=True, measure="exp"),
    ]


@pytest.fixture
def emitter():
    """Emitter with default output settings."""
    return ReportEmitter(OutputSettings(plot_data=True))


class TestEmit:
    """Test cases for single-format reports."""

    def test_csv_layout(self, emitter, records, tmp_path):
        """Test header, row count and ordering of the CSV report."""
        path = emitter.emit(records, "csv", tmp_path / "report.csv")
        lines = path.read_text().splitlines()

        assert len(lines) == 4
        assert lines[0] == ",".join(CSV_HEADER)
        assert [line.split(",")[0] for line in lines[1:]] == ["monotonicity", "rio-asymptotic", "w2-rate"]
        assert lines[1].split(",")[2] == "2"

    def test_runtime_is_zeroed_without_timing(self, emitter, records, tmp_path):
        """Test that runtimes only appear on request."""
        lines = emitter.emit(records, "csv", tmp_path / "a.csv").read_text().splitlines()
        assert lines[3].endswith(",0")

        timed = ReportEmitter(OutputSettings(include_timing=True))
        lines = timed.emit(records, "csv", tmp_path / "b.csv").read_text().splitlines()
        assert lines[3].endswith(",12")

    def test_output_is_byte_identical(self, emitter, records, tmp_path):
        """Test that emitting twice gives identical bytes for every format."""
        for fmt in ("csv", "json", "md"):
            first = emitter.emit(records, fmt, tmp_path / f"a.{fmt}").read_bytes()
            second = emitter.emit(list(reversed(records)), fmt, tmp_path / f"b.{fmt}").read_bytes()
            assert first == second

    def test_json_lines(self, emitter, records, tmp_path):
        """Test one JSON object per record with its formula."""
        lines = emitter.emit(records, "json", tmp_path / "r.json").read_text().splitlines()
        rows = [json.loads(line) for line in lines]

        assert len(rows) == 3
        assert rows[-1]["label"] == "w2-rate"
        assert rows[-1]["formula"] == "W2(nu_n, gamma)^2 <= d (Cp - 1) / n"

    def test_markdown_table(self, emitter, records, tmp_path):
        """Test the Markdown report with formulas and status."""
        text = emitter.emit(records, "md", tmp_path / "r.md").read_text()

        assert "`S(nu_n | gamma)^2 <= (m / n) S(nu_m | gamma)^2`" in text
        assert "| info |" in text
        assert "2 passed, 0 failed, 1 informational" in text

    def test_emit_report_function(self, records, tmp_path):
        """Test the module-level shortcut."""
        path = emit_report(records, "csv", tmp_path / "r.csv")
        assert len(path.read_text().splitlines()) == 4

    def test_empty_records(self, emitter, tmp_path):
        """Test that an empty report is refused."""
        with pytest.raises(ValueError):
            emitter.emit([], "csv", tmp_path / "r.csv")

    def test_unknown_format(self, emitter, records, tmp_path):
        """Test rejection of an unknown format."""
        with pytest.raises(ValueError):
            emitter.emit(records, "xlsx", tmp_path / "r.xlsx")

    def test_unwritable_path(self, emitter, records, tmp_path):
        """Test that a directory in place of the file raises ReportError."""
        target = tmp_path / "taken"
        target.mkdir()
        with pytest.raises(ReportError):
            emitter.emit(records, "csv", target)


class TestSummaryAndPlots:
    """Test cases for the summary and per-label plot data."""

    def test_summarize(self, records):
        """Test the status counts."""
        summary = summarize(records)
        assert summary["status"] == "pass"
        assert summary["informational"] == 1
        assert summary["by_label"]["w2-rate"] == {"failed": 0, "informational": 0, "passed": 1}

    def test_summary_reports_failure(self, records):
        """Test that one failed record fails the summary."""
        records.append(ExperimentRecord.check("w2-rate", 8, 1.0, 0.1))
        assert summarize(records)["status"] == "fail"

    def test_emit_all(self, emitter, records, tmp_path):
        """Test every output file of a run."""
        paths = emitter.emit_all(records, tmp_path)
        names = sorted(p.name for p in paths)

        assert names == ["plot_monotonicity.csv", "plot_rio-asymptotic.csv", "plot_w2-rate.csv",
                         "report.csv", "report.json", "report.md", "summary.json", "summary.md"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["records"] == 3

    def test_plot_label_is_sanitized(self, emitter, tmp_path):
        """Test file names for labels with a task prefix."""
        record = ExperimentRecord.check("task one.w2-rate", 1, 0.1, 0.2)
        (path,) = emitter.write_plot_data([record], tmp_path)
        assert path.name == "plot_task_one.w2-rate.csv"

    def test_formula_lookup(self):
        """Test formulas for prefixed and range labels."""
        assert formula_for("uni.w2-rate") == formula_for("w2-rate")
        assert formula_for("w2-slope-lower") == formula_for("w2-slope")
        assert formula_for("no-such-label") == ""
