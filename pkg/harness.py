"""
Experiment harness module
Responsible for Monte Carlo trials, NMSE and pilot-overhead metrics and CSV output
"""
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from baseline_ls import BaselineLsEstimator
from channel_model import assemble_channels, cascaded_channel, cascaded_channels, sample_paths
from config import Settings, settings as default_settings
from errors import BdRisError
from fd_estimator import BsRisChannelEstimator
from ris_user_estimator import RisUserChannelEstimator
from schemas import CSV_COLUMNS, ArrayGeometry, ExperimentConfig, MetricsRecord, ceil_log2, dbm_to_watts

logger = logging.getLogger(__name__)

# Fixed float format keeps reruns byte-identical
CSV_FLOAT_FORMAT = "%.10e"


def nmse(true_channels: Sequence[np.ndarray], estimates: Sequence[np.ndarray]) -> float:
    """Σ_k‖H_k − Ĥ_k‖²_F / Σ_k‖H_k‖²_F for one trial"""
    if len(true_channels) != len(estimates):
        raise ValueError(f"Got {len(true_channels)} channels but {len(estimates)} estimates")
    error = energy = 0.0
    for h, h_hat in zip(true_channels, estimates):
        h, h_hat = np.asarray(h), np.asarray(h_hat)
        if h.shape != h_hat.shape:
            raise ValueError(f"Shape mismatch: {h.shape} vs {h_hat.shape}")
        error += float(np.sum(np.abs(h - h_hat) ** 2))
        energy += float(np.sum(np.abs(h) ** 2))
    if energy == 0.0:
        raise ValueError("NMSE is undefined for all-zero channels")
    return error / energy


def planned_paths(cfg: ExperimentConfig) -> int:
    """Path count used for slot planning (known_paths when given, else L)"""
    return cfg.stage1.known_paths or cfg.bs_ris_paths


def pilot_overhead(cfg: ExperimentConfig, estimator: str, geometry: ArrayGeometry) -> int:
    """
    Training slots per estimation round

    baseline: K·N²; proposed: B·T + γ·C·T2 from the configured stage settings.
    """
    if estimator == "baseline":
        return BaselineLsEstimator.pilot_slots(cfg.users, geometry.ris_elements)
    if estimator != "proposed":
        raise ValueError(f"Unknown estimator: {estimator}")
    paths = planned_paths(cfg)
    stage1 = cfg.stage1.resolved_subframes(geometry) * cfg.stage1.resolved_slots(geometry, paths)
    stage2 = cfg.stage2.resolved_subframes(geometry, paths) * cfg.stage2.resolved_slots(cfg.users)
    return stage1 + cfg.reestimations * stage2


def closed_form_overhead(cfg: ExperimentConfig, geometry: ArrayGeometry) -> int:
    """Reference count L·min{⌈log₂M⌉, ⌈log₂N²⌉} + γ·K·⌈N/M⌉"""
    n, m = geometry.ris_elements, geometry.bs_antennas
    stage1 = cfg.bs_ris_paths * min(ceil_log2(m), ceil_log2(n ** 2))
    return stage1 + cfg.reestimations * cfg.users * math.ceil(n / m)


def overhead_table(cfg: ExperimentConfig, ris_sizes: Iterable[int]) -> pd.DataFrame:
    """Pilot slots of both estimators and the closed-form reference for each N"""
    rows = []
    for n in ris_sizes:
        geometry = cfg.geometry_for((int(n), 1))
        rows.append({
            "M": geometry.bs_antennas,
            "N": geometry.ris_elements,
            "K": cfg.users,
            "baseline": pilot_overhead(cfg, "baseline", geometry),
            "proposed": pilot_overhead(cfg, "proposed", geometry),
            "closed_form": closed_form_overhead(cfg, geometry),
        })
    return pd.DataFrame(rows, columns=["M", "N", "K", "baseline", "proposed", "closed_form"])


def trial_generators(seed: int, trial: int) -> List[np.random.Generator]:
    """Independent channel / stage-1 / stage-2 / baseline streams of one trial"""
    streams = np.random.SeedSequence(seed + trial).spawn(4)
    return [np.random.default_rng(s) for s in streams]


def write_csv_atomic(records: Sequence[MetricsRecord], path: Path) -> Path:
    """Write records with the fixed column order through a temporary file and rename"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([r.model_dump() for r in records], columns=CSV_COLUMNS)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.stem}-", suffix=".csv", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            df.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


class ExperimentRunner:
    """Runs every sweep point and trial of one experiment configuration"""

    def __init__(self, cfg: ExperimentConfig, runtime: Optional[Settings] = None):
        self.cfg = cfg
        self.settings = runtime or default_settings

    def estimate(self, estimator: str, ch, p_dbm: float, rngs) -> List[np.ndarray]:
        """Cascaded-channel estimates of one estimator for one realization"""
        _, stage1_rng, stage2_rng, baseline_rng = rngs
        g = ch.geometry
        if estimator == "baseline":
            runner = BaselineLsEstimator(dbm_to_watts(p_dbm), self.cfg.noise_var_w)
            return runner.run(ch, baseline_rng)

        paths = planned_paths(self.cfg)
        stage1 = BsRisChannelEstimator(self.cfg.stage1_for(p_dbm), g).run(ch, stage1_rng, paths)
        h_hat = RisUserChannelEstimator(self.cfg.stage2_for(p_dbm), g).run(
            ch, stage1.e_hat, stage2_rng, paths
        )
        return [cascaded_channel(h, stage1.e_hat) for h in h_hat]

    def run_trial(self, shape: Tuple[int, int], p_dbm: float, trial: int) -> List[MetricsRecord]:
        """One channel draw evaluated by every selected estimator"""
        cfg = self.cfg
        geometry = cfg.geometry_for(shape)
        rngs = trial_generators(cfg.seed, trial)
        paths = sample_paths(cfg, rngs[0], geometry)
        ch = assemble_channels(paths, geometry, seed=cfg.seed + trial)
        truth = cascaded_channels(ch)

        records = []
        for estimator in cfg.selected_estimators():
            started = time.perf_counter()
            value, failed = None, False
            try:
                value = nmse(truth, self.estimate(estimator, ch, p_dbm, rngs))
            except (BdRisError, np.linalg.LinAlgError, ValueError) as exc:
                failed = True
                logger.warning(
                    "Trial %d (N=%d, P=%.1f dBm) %s failed: %s",
                    trial, geometry.ris_elements, p_dbm, estimator, exc,
                )
            elapsed = (time.perf_counter() - started) * 1000.0
            records.append(MetricsRecord(
                experiment_id=cfg.experiment_id,
                trial=trial,
                M=geometry.bs_antennas,
                N=geometry.ris_elements,
                K=cfg.users,
                P_dBm=p_dbm,
                estimator=estimator,
                nmse=value,
                pilot_slots=pilot_overhead(cfg, estimator, geometry),
                wall_time_ms=elapsed if self.settings.record_wall_time else 0.0,
                error_flag=failed,
            ))
        return records

    def run(self) -> List[MetricsRecord]:
        """All sweep points × trials, in sweep order regardless of completion order"""
        for shape in self.cfg.ris_shapes if "proposed" in self.cfg.selected_estimators() else []:
            self.cfg.stage1.check(self.cfg.geometry_for(tuple(shape)), planned_paths(self.cfg))
        tasks = [
            (point, shape, p_dbm, trial)
            for point, (shape, p_dbm) in enumerate(self.cfg.sweep_points())
            for trial in range(self.cfg.trials)
        ]
        results = {}
        workers = min(self.settings.worker_count(), len(tasks))
        logger.info("Running %d trial(s) of %s on %d worker(s)", len(tasks), self.cfg.experiment_id, workers)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(self.run_trial, shape, p_dbm, trial): (point, trial)
                for point, shape, p_dbm, trial in tasks
            }
            progress = tqdm(
                as_completed(futures), total=len(futures),
                desc=self.cfg.experiment_id, dynamic_ncols=True,
                disable=not self.settings.progress,
            )
            for future in progress:
                results[futures[future]] = future.result()
        return [record for key in sorted(results) for record in results[key]]


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None,
                   runtime: Optional[Settings] = None) -> Tuple[List[MetricsRecord], Path]:
    """
    Run an experiment and write its CSV

    Args:
        cfg: validated experiment configuration
        out_dir: output directory (defaults to cfg.output_dir, then settings)
        runtime: runtime settings (defaults to the module settings)

    Returns:
        (records, CSV path)
    """
    runtime = runtime or default_settings
    records = ExperimentRunner(cfg, runtime).run()
    directory = Path(out_dir or cfg.output_dir or runtime.output_dir)
    csv_path = write_csv_atomic(records, directory / f"{cfg.experiment_id}.csv")
    failures = sum(r.error_flag for r in records)
    if failures:
        logger.warning("%d of %d estimator run(s) failed", failures, len(records))
    logger.info("Wrote %d record(s) to %s", len(records), csv_path)
    return records, csv_path
