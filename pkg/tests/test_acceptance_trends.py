"""Desk-scale Monte Carlo sweeps (run with `pytest -m slow`)."""
import numpy as np
import pandas as pd
import pytest

from config import Settings
from harness import run_experiment
from presets import fig3, fig4

pytestmark = pytest.mark.slow


QUIET = Settings(progress=False, record_wall_time=False)


@pytest.fixture(scope="module")
def power_sweep(tmp_path_factory):
    _, path = run_experiment(fig4(), str(tmp_path_factory.mktemp("fig4")), QUIET)
    return pd.read_csv(path)


@pytest.fixture(scope="module")
def size_sweep(tmp_path_factory):
    _, path = run_experiment(fig3(), str(tmp_path_factory.mktemp("fig3")), QUIET)
    return pd.read_csv(path)


def medians(df: pd.DataFrame, x: str, estimator: str) -> pd.Series:
    valid = df[(df["estimator"] == estimator) & ~df["error_flag"]]
    return valid.groupby(x)["nmse"].median().sort_index()


class TestPowerSweep:

    def test_baseline_follows_inverse_snr(self, power_sweep):
        baseline = medians(power_sweep, "P_dBm", "baseline")
        assert baseline.index.tolist() == [0.0, 10.0, 20.0, 30.0]
        ratios = baseline.values[:-1] / baseline.values[1:]
        assert np.all(ratios >= 5.0)
        # channel and noise draws are shared across powers, so the slope is exact
        np.testing.assert_allclose(ratios, 10.0, rtol=1e-6)

    def test_proposed_reaches_a_floor(self, power_sweep):
        proposed = medians(power_sweep, "P_dBm", "proposed")
        assert proposed.index.tolist() == [0.0, 10.0, 20.0, 30.0]
        assert proposed[30.0] / proposed[20.0] >= 0.5

    def test_proposed_beats_zero_estimate_at_high_power(self, power_sweep):
        proposed = medians(power_sweep, "P_dBm", "proposed")
        assert proposed[20.0] < 1.0
        assert proposed[30.0] < 1.0

    def test_every_point_reports_both_estimators(self, power_sweep):
        cfg = fig4()
        assert len(power_sweep) == len(cfg.power_dbm) * cfg.trials * 2
        counts = power_sweep.groupby(["P_dBm", "estimator"]).size()
        assert (counts == cfg.trials).all()


class TestRisSizeSweep:

    def test_proposed_non_increasing_in_n(self, size_sweep):
        proposed = medians(size_sweep, "N", "proposed")
        assert proposed.index.tolist() == [16, 36, 64]
        steps = proposed.values[1:] / proposed.values[:-1]
        assert np.all(steps < 1.1)

    def test_proposed_beats_baseline_at_largest_ris(self, size_sweep):
        proposed = medians(size_sweep, "N", "proposed")
        baseline = medians(size_sweep, "N", "baseline")
        assert proposed[64] < baseline[64]

    def test_most_trials_succeed(self, size_sweep):
        failures = size_sweep.groupby(["N", "estimator"])["error_flag"].mean()
        assert (failures <= 0.2).all()

    def test_overhead_and_records(self, size_sweep):
        slots = size_sweep.groupby(["N", "estimator"])["pilot_slots"].first().unstack()
        assert sorted(size_sweep["N"].unique().tolist()) == [16, 36, 64]
        assert (slots["proposed"] < slots["baseline"]).all()
        assert slots["baseline"].tolist() == [4 * n * n for n in (16, 36, 64)]
        assert not size_sweep.loc[size_sweep["estimator"] == "baseline", "error_flag"].any()
