"""
Pydantic data models
Used for experiment configuration, array geometry and metrics validation
"""
import logging
import math
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ConfigError

logger = logging.getLogger(__name__)

# Fixed CSV column order
CSV_COLUMNS = [
    "experiment_id", "trial", "M", "N", "K", "P_dBm", "estimator",
    "nmse", "pilot_slots", "wall_time_ms", "error_flag",
]


def dbm_to_watts(dbm: float) -> float:
    """Convert dBm to watts"""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def ceil_log2(x: int) -> int:
    """Smallest integer b with 2**b >= x"""
    return max(0, math.ceil(math.log2(x))) if x > 1 else 0


def stage1_subframe_budget(geometry: "ArrayGeometry") -> int:
    """Smallest B with B >= log2(M) and B >= log2(N²)"""
    return max(ceil_log2(geometry.bs_antennas), ceil_log2(geometry.ris_elements ** 2), 1)


class ArrayGeometry(BaseModel):
    """BS array split and RIS planar array dimensions"""
    model_config = ConfigDict(frozen=True)

    bs_antennas: int = Field(ge=2)
    rx_antennas: int = Field(ge=1)
    tx_antennas: int = Field(ge=1)
    ris_rows: int = Field(ge=1)
    ris_cols: int = Field(ge=1)
    spacing: float = Field(default=0.5, gt=0.0, le=0.5)  # d / λ

    @model_validator(mode="after")
    def check_split(self):
        if self.rx_antennas + self.tx_antennas != self.bs_antennas:
            raise ValueError(
                f"rx_antennas + tx_antennas must equal bs_antennas "
                f"({self.rx_antennas} + {self.tx_antennas} != {self.bs_antennas})"
            )
        return self

    @property
    def ris_elements(self) -> int:
        return self.ris_rows * self.ris_cols


class FdStage1Config(BaseModel):
    """Full-duplex BS-RIS estimation settings (None fields use geometry defaults)"""
    model_config = ConfigDict(extra="forbid")

    subframes: Optional[int] = Field(default=None, ge=1)         # B
    slots: Optional[int] = Field(default=None, ge=1)             # T
    transmit_power_w: float = Field(default=1.0, ge=0.0)
    noise_var_w: float = Field(default=0.0, ge=0.0)              # σ_eff²
    elevation_grid: int = Field(default=180, ge=2)               # G_ι
    azimuth_grid: int = Field(default=180, ge=2)                 # G_φ
    rotation_step: Optional[float] = Field(default=None, gt=0.0)  # ε
    peak_threshold: float = Field(default=0.2, gt=0.0, lt=1.0)   # ρ
    known_paths: Optional[int] = Field(default=None, ge=1)
    min_correlation: float = Field(default=0.1, ge=0.0, le=1.0)
    deflation_passes: int = Field(default=1, ge=0)
    gain_resolution: Literal["takagi", "hermitian"] = "takagi"
    angle_refinement: int = Field(default=0, ge=0)               # local RIS search, 0 = grid only

    def resolved_subframes(self, geometry: ArrayGeometry) -> int:
        if self.subframes is not None:
            return self.subframes
        return stage1_subframe_budget(geometry)

    def resolved_slots(self, geometry: ArrayGeometry, paths: Optional[int] = None) -> int:
        if self.slots is not None:
            return self.slots
        return max(geometry.tx_antennas, paths or self.known_paths or 1)

    def resolved_rotation_step(self, geometry: ArrayGeometry) -> float:
        if self.rotation_step is not None:
            return self.rotation_step
        return 1.0 / (16 * geometry.rx_antennas)

    def check(self, geometry: ArrayGeometry, paths: Optional[int] = None) -> None:
        """Validate the resolved budget against the geometry"""
        slots = self.resolved_slots(geometry, paths)
        if slots < geometry.tx_antennas:
            raise ConfigError(
                f"Stage-1 slots T={slots} < M_T={geometry.tx_antennas}: pilot matrix "
                "cannot satisfy S·Sᴴ = I"
            )
        if paths is not None and slots < paths:
            raise ConfigError(f"Stage-1 slots T={slots} < L={paths}")
        budget = stage1_subframe_budget(geometry)
        if self.resolved_subframes(geometry) < budget:
            logger.warning(
                "Stage-1 subframes B=%d below sparse-recovery budget %d",
                self.resolved_subframes(geometry), budget,
            )
        if self.resolved_rotation_step(geometry) > 1.0 / (16 * geometry.rx_antennas):
            logger.warning("Rotation step gives fewer than 8 points per half interval")


class Stage2Config(BaseModel):
    """RIS-user LS estimation settings"""
    model_config = ConfigDict(extra="forbid")

    subframes: Optional[int] = Field(default=None, ge=1)         # C
    subframe_rule: Literal["min_identifiable", "rank_aware"] = "min_identifiable"
    oversampling: float = Field(default=1.0, ge=1.0)             # rank_aware: C >= oversampling·N/L
    slots: Optional[int] = Field(default=None, ge=1)             # T2
    transmit_power_w: float = Field(default=1.0, ge=0.0)
    noise_var_w: float = Field(default=0.0, ge=0.0)
    max_condition: float = Field(default=1e6, gt=1.0)            # κ_max
    max_redraws: int = Field(default=8, ge=1)

    def resolved_subframes(self, geometry: ArrayGeometry, paths: Optional[int] = None) -> int:
        if self.subframes is not None:
            return self.subframes
        n, m = geometry.ris_elements, geometry.bs_antennas
        count = math.ceil(n / m)
        if self.subframe_rule == "rank_aware" and paths:
            count = max(count, math.ceil(self.oversampling * n / paths - 1e-9))
        return count

    def resolved_slots(self, users: int) -> int:
        slots = self.slots if self.slots is not None else users
        if slots < users:
            raise ConfigError(f"Stage-2 slots T2={slots} < K={users}")
        return slots


class ExperimentConfig(BaseModel):
    """Complete scenario, estimator and sweep description"""
    model_config = ConfigDict(extra="forbid")

    experiment_id: str = "experiment"
    bs_antennas: int = Field(default=32, ge=2)
    rx_antennas: Optional[int] = Field(default=None, ge=1)
    ris_shapes: List[Tuple[int, int]] = Field(default_factory=lambda: [(4, 4)])
    power_dbm: List[float] = Field(default_factory=lambda: [20.0])
    noise_dbm: Optional[float] = -100.0
    self_interference_db: float = 0.0
    users: int = Field(default=4, ge=1)
    bs_ris_paths: int = Field(default=3, ge=1)
    user_paths: int = Field(default=4, ge=1)
    carrier_ghz: float = Field(default=28.0, gt=0.0)
    bs_ris_distance_m: float = Field(default=10.0, gt=0.0)
    ris_user_distance_m: float = Field(default=50.0, gt=0.0)
    bs_ris_exponent: float = 2.2
    ris_user_exponent: float = 2.2
    shadowing_db: float = Field(default=2.0, ge=0.0)
    antenna_spacing: float = Field(default=0.5, gt=0.0, le=0.5)
    reestimations: int = Field(default=2, ge=0)                   # γ
    on_grid: bool = False
    stage1: FdStage1Config = Field(default_factory=FdStage1Config)
    stage2: Stage2Config = Field(default_factory=Stage2Config)
    estimators: Literal["baseline", "proposed", "both"] = "both"
    trials: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)
    output_dir: Optional[str] = None

    @field_validator("power_dbm", mode="before")
    @classmethod
    def scalar_power(cls, value: Union[float, List[float]]):
        if isinstance(value, (int, float)):
            return [float(value)]
        return value

    @field_validator("power_dbm", "ris_shapes")
    @classmethod
    def non_empty(cls, value):
        if not value:
            raise ValueError("Sweep lists must not be empty")
        return value

    @field_validator("ris_shapes")
    @classmethod
    def positive_shapes(cls, value):
        for n1, n2 in value:
            if n1 < 1 or n2 < 1:
                raise ValueError(f"RIS shape ({n1}, {n2}) must be positive")
        return value

    @model_validator(mode="after")
    def check_split(self):
        rx = self.resolved_rx_antennas
        if not 1 <= rx < self.bs_antennas:
            raise ValueError(f"rx_antennas must lie in [1, {self.bs_antennas - 1}], got {rx}")
        return self

    @property
    def resolved_rx_antennas(self) -> int:
        return self.rx_antennas if self.rx_antennas is not None else self.bs_antennas // 2

    @property
    def noise_var_w(self) -> float:
        """Receiver noise variance σ² in watts (0 when noiseless)"""
        return 0.0 if self.noise_dbm is None else dbm_to_watts(self.noise_dbm)

    @property
    def effective_noise_var_w(self) -> float:
        """Stage-1 noise including residual self-interference"""
        return self.noise_var_w * 10.0 ** (self.self_interference_db / 10.0)

    def geometry_for(self, shape: Tuple[int, int]) -> ArrayGeometry:
        """Array geometry at one RIS-shape sweep point"""
        rx = self.resolved_rx_antennas
        return ArrayGeometry(
            bs_antennas=self.bs_antennas,
            rx_antennas=rx,
            tx_antennas=self.bs_antennas - rx,
            ris_rows=shape[0],
            ris_cols=shape[1],
            spacing=self.antenna_spacing,
        )

    def sweep_points(self) -> List[Tuple[Tuple[int, int], float]]:
        """All (RIS shape, P_dBm) combinations in sweep order"""
        return [(tuple(shape), p) for shape in self.ris_shapes for p in self.power_dbm]

    def selected_estimators(self) -> List[str]:
        if self.estimators == "both":
            return ["baseline", "proposed"]
        return [self.estimators]

    def stage1_for(self, power_dbm: float) -> FdStage1Config:
        """Stage-1 config with this sweep point's power and effective noise"""
        return self.stage1.model_copy(update={
            "transmit_power_w": dbm_to_watts(power_dbm),
            "noise_var_w": self.effective_noise_var_w,
        })

    def stage2_for(self, power_dbm: float) -> Stage2Config:
        """Stage-2 config with this sweep point's power and noise"""
        return self.stage2.model_copy(update={
            "transmit_power_w": dbm_to_watts(power_dbm),
            "noise_var_w": self.noise_var_w,
        })


class MetricsRecord(BaseModel):
    """One estimator run in one trial at one sweep point"""
    experiment_id: str
    trial: int = Field(ge=0)
    M: int
    N: int
    K: int
    P_dBm: float
    estimator: str
    nmse: Optional[float] = Field(default=None, ge=0.0)
    pilot_slots: int = Field(ge=0)
    wall_time_ms: float = Field(default=0.0, ge=0.0)
    error_flag: bool = False
