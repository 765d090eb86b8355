"""
RIS-user channel estimation module
Responsible for the stage-2 LS estimate of every h_k given the stage-1 Ê
"""
import logging
import math
from typing import Optional

import numpy as np

from channel_model import ChannelRealization
from errors import DimensionError, IdentifiabilityError, RankDeficiencyError
from numerics import complex_gaussian, dft_matrix, numerical_rank, solve_ls
from scattering import ScatteringSchedule, build_schedule, stacked_response
from schemas import ArrayGeometry, Stage2Config

logger = logging.getLogger(__name__)


def stage2_pilots(users: int, slots: int) -> np.ndarray:
    """First K columns of the T2-point DFT matrix; column k is user k's pilot"""
    if slots < users:
        raise DimensionError(f"Need T2 >= K orthogonal slots, got T2={slots}, K={users}")
    return dft_matrix(slots)[:, :users]


def simulate_stage2_uplink(ch: ChannelRealization, sched: ScatteringSchedule, cfg: Stage2Config,
                           rng: Optional[np.random.Generator] = None,
                           pilots: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Uplink blocks Y_c = Σ_k √P·E·Θ_c·h_k·x_kᵀ + N_c

    Returns:
        Array of shape (C, M, T2)
    """
    users, n = ch.ris_user.shape
    if sched.ris_elements != n:
        raise DimensionError(f"Schedule is for N={sched.ris_elements}, channel has N={n}")
    x = stage2_pilots(users, cfg.resolved_slots(users)) if pilots is None else np.asarray(pilots, dtype=complex)
    if x.shape[1] != users:
        raise DimensionError(f"Pilot matrix needs {users} columns, got {x.shape[1]}")

    reflected = ch.bs_ris @ sched.matrices @ ch.ris_user.T        # (C, M, K)
    received = math.sqrt(cfg.transmit_power_w) * (reflected @ x.T)
    if cfg.noise_var_w > 0:
        if rng is None:
            raise ValueError("A generator is required for noisy simulation")
        received = received + complex_gaussian(rng, received.shape, cfg.noise_var_w)
    return received


def decorrelate_user(y_c, x_k) -> np.ndarray:
    """y_{c,k} = Y_c·conj(x_k)"""
    return np.asarray(y_c, dtype=complex) @ np.asarray(x_k, dtype=complex).conj()


def ls_estimate_h(y_stack, e_hat: np.ndarray, sched: ScatteringSchedule, cfg: Stage2Config) -> np.ndarray:
    """
    LS estimate of one user's RIS channel from its decorrelated observations

    Args:
        y_stack: (C, M) observations y_{c,k}, stacked in schedule order
        e_hat: estimated BS-RIS channel Ê (M×N)
        sched: stage-2 schedule with C matrices
        cfg: stage-2 settings (P, κ_max)

    Returns:
        ĥ_k of length N

    Raises:
        IdentifiabilityError: C·M < N
        RankDeficiencyError: rank(Ê)·C < N or κ(F̂) > κ_max
    """
    y = np.asarray(y_stack, dtype=complex)
    m, n = e_hat.shape
    count = sched.count
    if y.shape != (count, m):
        raise DimensionError(f"Observations of shape {y.shape}, expected ({count}, {m})")
    if count * m < n:
        raise IdentifiabilityError(f"C·M = {count * m} observations cannot identify N = {n} unknowns")
    rank = numerical_rank(e_hat)
    if rank * count < n:
        raise RankDeficiencyError(
            f"Stacked sensing matrix has rank at most C·rank(Ê) = {count}·{rank} < N = {n}"
        )
    if cfg.transmit_power_w <= 0:
        raise ValueError("Transmit power must be positive for estimation")

    f_hat = math.sqrt(cfg.transmit_power_w) * stacked_response(e_hat, sched.matrices)
    return solve_ls(f_hat, y.reshape(-1), max_condition=cfg.max_condition).ravel()


class RisUserChannelEstimator:
    """Stage-2 estimator: one LS problem per user over C subframes"""

    def __init__(self, cfg: Stage2Config, geometry: ArrayGeometry):
        self.cfg = cfg
        self.geometry = geometry

    def subframes(self, paths: Optional[int] = None) -> int:
        return self.cfg.resolved_subframes(self.geometry, paths)

    def pilot_slots(self, users: int, paths: Optional[int] = None) -> int:
        """Slots of one estimation round (C·T2)"""
        return self.subframes(paths) * self.cfg.resolved_slots(users)

    def run(self, ch: ChannelRealization, e_hat: np.ndarray, rng: np.random.Generator,
            paths: Optional[int] = None) -> np.ndarray:
        """
        Simulate one stage-2 round for ch and estimate every h_k from Ê

        Returns:
            K×N array with ĥ_k as rows
        """
        users = ch.ris_user.shape[0]
        count = self.subframes(paths)
        if count * self.geometry.bs_antennas < self.geometry.ris_elements:
            raise IdentifiabilityError(
                f"C·M = {count * self.geometry.bs_antennas} < N = {self.geometry.ris_elements}"
            )
        slots = self.cfg.resolved_slots(users)
        sched = build_schedule(
            "stage2", self.geometry, count, rng,
            slot_span=slots,
            e_hat=e_hat,
            max_condition=self.cfg.max_condition,
            max_redraws=self.cfg.max_redraws,
        )
        x = stage2_pilots(users, slots)
        y = simulate_stage2_uplink(ch, sched, self.cfg, rng, pilots=x)
        estimates = np.empty((users, self.geometry.ris_elements), dtype=complex)
        for k in range(users):
            estimates[k] = ls_estimate_h(decorrelate_user(y, x[:, k]), e_hat, sched, self.cfg)
        logger.debug("Stage 2 estimated %d user channel(s) over C=%d subframes", users, count)
        return estimates
