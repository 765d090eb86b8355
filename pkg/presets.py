"""
Experiment presets
Desk-scale configurations for the N sweep, the power sweep, the pilot-overhead
comparison and a noiseless smoke run
"""
from typing import Callable, Dict, List

from errors import ConfigError
from schemas import ExperimentConfig, FdStage1Config, Stage2Config

# Noise floor of the desk sweeps; at -100 dBm both estimators are noise-dominated
DESK_NOISE_DBM = -150.0

# Local RIS angle refinement and stage-2 subframes per N/L of the desk sweeps
DESK_ANGLE_REFINEMENT = 8
DESK_STAGE2_OVERSAMPLING = 8.0

# Full-scale N values for the overhead table
OVERHEAD_RIS_SIZES: List[int] = [16, 100, 1000, 10000]


def smoke() -> ExperimentConfig:
    """Noiseless on-grid run where both estimators are exact"""
    return ExperimentConfig(
        experiment_id="smoke",
        bs_antennas=16,
        ris_shapes=[(4, 4)],
        power_dbm=[20.0],
        noise_dbm=None,
        users=2,
        bs_ris_paths=2,
        user_paths=2,
        on_grid=True,
        stage1=FdStage1Config(known_paths=2),
        stage2=Stage2Config(subframe_rule="rank_aware"),
        trials=2,
    )


def _desk_stages() -> Dict[str, object]:
    return {
        "stage1": FdStage1Config(known_paths=3, angle_refinement=DESK_ANGLE_REFINEMENT),
        "stage2": Stage2Config(subframe_rule="rank_aware", oversampling=DESK_STAGE2_OVERSAMPLING),
    }


def fig3() -> ExperimentConfig:
    """NMSE against the number of RIS elements"""
    return ExperimentConfig(
        experiment_id="nmse_vs_ris_elements",
        bs_antennas=32,
        ris_shapes=[(4, 4), (6, 6), (8, 8)],
        power_dbm=[20.0],
        noise_dbm=DESK_NOISE_DBM,
        users=4,
        bs_ris_paths=3,
        user_paths=4,
        **_desk_stages(),
        trials=50,
    )


def fig4() -> ExperimentConfig:
    """NMSE against transmit power"""
    return ExperimentConfig(
        experiment_id="nmse_vs_power",
        bs_antennas=32,
        ris_shapes=[(6, 6)],
        power_dbm=[0.0, 10.0, 20.0, 30.0],
        noise_dbm=DESK_NOISE_DBM,
        users=4,
        bs_ris_paths=3,
        user_paths=4,
        **_desk_stages(),
        trials=50,
    )


def fig5() -> ExperimentConfig:
    """
    Pilot overhead against the number of RIS elements

    Simulated at desk scale with few trials; the `overhead` command evaluates
    full scale (see full_scale_overhead).
    """
    return ExperimentConfig(
        experiment_id="pilot_overhead",
        bs_antennas=32,
        ris_shapes=[(4, 4), (6, 6), (8, 8)],
        power_dbm=[20.0],
        noise_dbm=DESK_NOISE_DBM,
        users=4,
        bs_ris_paths=3,
        user_paths=4,
        **_desk_stages(),
        trials=5,
    )


def full_scale_overhead() -> ExperimentConfig:
    """M = 80 counting configuration with the minimum-identifiable stage-2 rule"""
    return ExperimentConfig(
        experiment_id="pilot_overhead_m80",
        bs_antennas=80,
        users=4,
        bs_ris_paths=3,
        reestimations=2,
    )


PRESETS: Dict[str, Callable[[], ExperimentConfig]] = {
    "smoke": smoke,
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
}


def get_preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"Unknown preset '{name}', choose from {sorted(PRESETS)}") from None
