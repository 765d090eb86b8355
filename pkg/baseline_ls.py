"""
Cascaded-channel LS baseline module
Responsible for the conventional K·N²-slot cascaded estimator used for comparison
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from channel_model import ChannelRealization
from errors import DimensionError, NonOrthogonalScheduleError
from numerics import complex_gaussian, dft_matrix, is_unitary, vec_stack
from scattering import ScatteringSchedule, build_schedule

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-6


@dataclass(frozen=True)
class BaselineMeasurement:
    """
    Per-user decorrelated observations of the baseline training phase

    observations[k, :, τ] is y_{k,τ} = √P·H_k·vec(Θ_τ) + noise.
    """
    observations: np.ndarray
    schedule: ScatteringSchedule
    transmit_power_w: float
    noise_var_w: float

    def __post_init__(self):
        n = self.schedule.ris_elements
        if self.observations.ndim != 3 or self.observations.shape[2] != n * n:
            raise DimensionError(
                f"Expected observations of shape (K, M, {n * n}), got {self.observations.shape}"
            )

    @property
    def users(self) -> int:
        return int(self.observations.shape[0])

    @property
    def pilot_slots(self) -> int:
        return self.users * self.schedule.count


def simulate_baseline_uplink(ch: ChannelRealization, sched: ScatteringSchedule,
                             pilots: Optional[np.ndarray] = None,
                             transmit_power_w: float = 1.0, noise_var_w: float = 0.0,
                             rng: Optional[np.random.Generator] = None) -> BaselineMeasurement:
    """
    Simulate N² blocks of K slots and decorrelate each user

    Args:
        ch: channel realization
        sched: baseline schedule, one matrix per block of K slots
        pilots: K×K matrix whose column k is user k's pilot; defaults to the
            K-point DFT matrix
        transmit_power_w: P in watts
        noise_var_w: receiver noise variance σ² in watts
        rng: generator for the noise (needed when σ² > 0)

    Returns:
        BaselineMeasurement
    """
    users, n = ch.ris_user.shape
    if sched.ris_elements != n:
        raise DimensionError(f"Schedule is for N={sched.ris_elements}, channel has N={n}")
    if sched.count != n * n:
        raise DimensionError(f"Baseline needs N² = {n * n} scattering matrices, got {sched.count}")
    x = dft_matrix(users) if pilots is None else np.asarray(pilots, dtype=complex)
    if x.shape != (users, users):
        raise DimensionError(f"Pilot matrix must be {users}x{users}, got {x.shape}")
    if not is_unitary(x, atol=1e-10):
        raise ValueError("User pilots must be orthonormal")

    # signals[k, :, τ] = E·Θ_τ·h_k
    reflected = np.einsum("tij,kj->kti", sched.matrices, ch.ris_user, optimize=True)
    signals = np.einsum("mi,kti->kmt", ch.bs_ris, reflected, optimize=True)

    received = math.sqrt(transmit_power_w) * np.einsum("kmt,sk->tms", signals, x)
    if noise_var_w > 0:
        if rng is None:
            raise ValueError("A generator is required for noisy simulation")
        received = received + complex_gaussian(rng, received.shape, noise_var_w)

    observations = np.ascontiguousarray(np.einsum("tms,sk->kmt", received, x.conj(), optimize=True))
    return BaselineMeasurement(observations, sched, transmit_power_w, noise_var_w)


def check_orthogonal_schedule(sched: ScatteringSchedule, tol: float = ORTHOGONALITY_TOL) -> None:
    """
    Verify that the vectorized schedule has Gram matrix N·I

    A seeded random vector z is pushed through V·Vᴴ (V has columns vec(Θ_τ)) instead
    of forming the N²×N² Gram matrix. Row-major flattening only permutes the
    entries of vec(Θ_τ), which leaves the Gram test unchanged.
    """
    n = sched.ris_elements
    if sched.count != n * n:
        raise NonOrthogonalScheduleError(f"Schedule has {sched.count} matrices, expected {n * n}")
    flat = _flat_view(sched)
    z = complex_gaussian(np.random.default_rng(0), n * n)
    image = flat.T @ np.conj(flat @ z.conj())
    deviation = np.max(np.abs(image - n * z))
    if deviation > tol * n * np.max(np.abs(z)):
        raise NonOrthogonalScheduleError(
            f"Vectorization Gram deviates from N·I (max deviation {deviation:.3e})"
        )


def _flat_view(sched: ScatteringSchedule) -> np.ndarray:
    # row τ holds Θ_τ flattened row-major; a view of the cached family
    return sched.matrices.reshape(sched.count, -1)


def estimate_cascaded_ls(meas: BaselineMeasurement) -> List[np.ndarray]:
    """Matched-filter LS estimate Ĥ_k = Σ_τ y_{k,τ}·vec(Θ_τ)ᴴ / (√P·N) for every user"""
    check_orthogonal_schedule(meas.schedule)
    if meas.transmit_power_w <= 0:
        raise ValueError("Transmit power must be positive for estimation")
    n = meas.schedule.ris_elements
    flat = _flat_view(meas.schedule)
    scale = 1.0 / (math.sqrt(meas.transmit_power_w) * n)
    estimates = []
    for obs in meas.observations:
        # (M, N²) in row-major element order, then reordered to vec(·) columns
        row_major = np.conj(np.ascontiguousarray(obs).conj() @ flat)
        estimates.append(scale * vec_stack(row_major.reshape(-1, n, n)))
    return estimates


class BaselineLsEstimator:
    """Cascaded LS baseline: schedule, simulated training and estimation in one call"""

    name = "baseline"

    def __init__(self, transmit_power_w: float, noise_var_w: float):
        self.transmit_power_w = transmit_power_w
        self.noise_var_w = noise_var_w

    @staticmethod
    def pilot_slots(users: int, ris_elements: int) -> int:
        return users * ris_elements ** 2

    def run(self, ch: ChannelRealization, rng: np.random.Generator) -> List[np.ndarray]:
        """Estimate every user's cascaded channel from a fresh training phase"""
        users = ch.ris_user.shape[0]
        sched = build_schedule("baseline", ch.geometry, None, slot_span=users)
        meas = simulate_baseline_uplink(
            ch, sched,
            transmit_power_w=self.transmit_power_w,
            noise_var_w=self.noise_var_w,
            rng=rng,
        )
        logger.debug("Baseline training used %d slots", meas.pilot_slots)
        return estimate_cascaded_ls(meas)
