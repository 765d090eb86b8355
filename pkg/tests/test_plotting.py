"""Tests for figure rendering from experiment CSVs."""
import pytest

from errors import PlotError
from harness import write_csv_atomic
from plotting import FIGURES, emit_plots, load_results
from schemas import CSV_COLUMNS, MetricsRecord


def record(n, estimator, nmse, trial=0, p_dbm=20.0, failed=False):
    return MetricsRecord(
        experiment_id="plots", trial=trial, M=16, N=n, K=2, P_dBm=p_dbm, estimator=estimator,
        nmse=None if failed else nmse, pilot_slots=4 * n * n if estimator == "baseline" else 96,
        error_flag=failed,
    )


@pytest.fixture
def results_csv(tmp_path):
    records = [
        record(n, estimator, value, trial)
        for n in (16, 36)
        for estimator, value in (("baseline", 1e-2), ("proposed", 3e-3))
        for trial in (0, 1)
    ]
    records.append(record(36, "proposed", None, trial=2, failed=True))
    return write_csv_atomic(records, tmp_path / "plots.csv")


class TestEmitPlots:

    def test_writes_one_svg_per_figure(self, results_csv, tmp_path):
        paths = emit_plots(results_csv, tmp_path / "figs")
        assert sorted(p.name for p in paths) == sorted(f"{name}.svg" for name in FIGURES)
        for path in paths:
            assert "<svg" in path.read_text(encoding="utf-8")

    def test_subset(self, results_csv, tmp_path):
        paths = emit_plots(results_csv, tmp_path, figures=["nmse_vs_power"])
        assert [p.name for p in paths] == ["nmse_vs_power.svg"]

    def test_single_point(self, tmp_path):
        csv = write_csv_atomic([record(16, "baseline", 0.1)], tmp_path / "one.csv")
        assert len(emit_plots(csv, tmp_path / "figs")) == len(FIGURES)

    def test_unknown_figure(self, results_csv, tmp_path):
        with pytest.raises(PlotError):
            emit_plots(results_csv, tmp_path, figures=["nmse_vs_users"])

    def test_empty_file_writes_nothing(self, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text("", encoding="utf-8")
        with pytest.raises(PlotError):
            emit_plots(csv, tmp_path / "figs")
        assert not (tmp_path / "figs").exists()


class TestLoadResults:

    def test_missing_file(self, tmp_path):
        with pytest.raises(PlotError):
            load_results(tmp_path / "absent.csv")

    def test_header_only(self, tmp_path):
        csv = tmp_path / "header.csv"
        csv.write_text(",".join(CSV_COLUMNS) + "\n", encoding="utf-8")
        with pytest.raises(PlotError):
            load_results(csv)

    def test_missing_column(self, tmp_path):
        csv = tmp_path / "partial.csv"
        csv.write_text("N,nmse\n16,0.1\n", encoding="utf-8")
        with pytest.raises(PlotError, match="estimator"):
            load_results(csv)

    def test_failed_rows_are_kept(self, results_csv):
        df = load_results(results_csv)
        assert len(df) == 9
        assert df["error_flag"].sum() == 1
