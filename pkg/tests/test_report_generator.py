"""Tests for the Markdown experiment report."""
import pandas as pd
import pytest

from presets import smoke
from report_generator import ReportGenerator
from schemas import MetricsRecord


def records():
    rows = []
    for trial, (baseline, proposed) in enumerate([(1e-2, 2e-3), (3e-2, None)]):
        common = dict(experiment_id="smoke", trial=trial, M=16, N=16, K=2, P_dBm=20.0)
        rows.append(MetricsRecord(**common, estimator="baseline", nmse=baseline, pilot_slots=512))
        rows.append(MetricsRecord(**common, estimator="proposed", nmse=proposed, pilot_slots=96,
                                  error_flag=proposed is None))
    return rows


class TestReportGenerator:

    def test_summary_statistics(self):
        df = pd.DataFrame([r.model_dump() for r in records()])
        df["nmse"] = pd.to_numeric(df["nmse"])
        summary = ReportGenerator().summarize(df).set_index("estimator")
        assert summary.loc["baseline", "median"] == pytest.approx(2e-2)
        assert summary.loc["proposed", "median"] == pytest.approx(2e-3)
        assert summary.loc["proposed", "failed"] == 1
        assert summary.loc["proposed", "runs"] == 2

    def test_report_contents(self, tmp_path):
        path = ReportGenerator().generate_report(smoke(), records(), tmp_path / "nested" / "smoke_report.md")
        text = path.read_text(encoding="utf-8")
        assert text.startswith("# Experiment Report - smoke")
        assert "noiseless" in text
        assert "| 16 | 20.0 | baseline | 2.000e-02 |" in text
        assert "1/2" in text
        assert "1 of 4 estimator runs failed" in text

    def test_clean_run_message(self, tmp_path):
        clean = [r for r in records() if not r.error_flag]
        text = ReportGenerator().generate_report(smoke(), clean, tmp_path / "r.md").read_text(encoding="utf-8")
        assert "All 3 estimator runs completed." in text
