"""
Scattering design module
Responsible for unitary BD-RIS scattering matrices and per-stage schedules
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy.stats import unitary_group

from errors import DimensionError
from numerics import condition_number, vec_stack
from schemas import ArrayGeometry

logger = logging.getLogger(__name__)

Stage = Literal["baseline", "stage1", "stage2"]


@dataclass(frozen=True)
class ScatteringSchedule:
    """
    Ordered scattering matrices of one estimation stage

    matrices has shape (count, N, N); each matrix stays fixed for slot_span
    consecutive time slots.
    """
    stage: Stage
    matrices: np.ndarray
    slot_span: int = 1

    def __post_init__(self):
        if self.matrices.ndim != 3 or self.matrices.shape[1] != self.matrices.shape[2]:
            raise DimensionError(f"Expected a stack of square matrices, got {self.matrices.shape}")
        if self.slot_span < 1:
            raise ValueError("slot_span must be positive")

    @property
    def count(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def ris_elements(self) -> int:
        return int(self.matrices.shape[1])

    @property
    def total_slots(self) -> int:
        return self.count * self.slot_span

    def max_unitarity_error(self) -> float:
        """Largest entrywise deviation of ΘᴴΘ from the identity"""
        gram = np.einsum("bji,bjk->bik", self.matrices.conj(), self.matrices)
        return float(np.max(np.abs(gram - np.eye(self.ris_elements))))


@lru_cache(maxsize=8)
def weyl_heisenberg_basis(n: int) -> np.ndarray:
    """
    Clock-and-shift family Θ_(p,q) = Dᵖ·Πᵠ stored at index p·n + q

    D = diag(ω⁰, …, ω^(n−1)) with ω = exp(j2π/n) and Π the cyclic shift
    e_i → e_(i+1 mod n). The n² matrices are unitary and trace-orthogonal:
    trace(Θ_aᴴΘ_b) = n·δ_ab.

    Returns:
        Read-only array of shape (n², n, n)
    """
    if n < 1:
        raise ValueError(f"RIS size must be positive, got {n}")
    eye = np.eye(n, dtype=complex)
    shifts = np.stack([np.roll(eye, q, axis=0) for q in range(n)])
    clock = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)  # [p, row]
    basis = clock[:, None, :, None] * shifts[None, :, :, :]
    basis = basis.reshape(n * n, n, n)
    basis.flags.writeable = False
    return basis


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n×n unitary (a unit-modulus scalar when n = 1)"""
    if n < 1:
        raise ValueError(f"RIS size must be positive, got {n}")
    if n == 1:
        return np.exp(2j * np.pi * rng.uniform()).reshape(1, 1)
    return unitary_group.rvs(n, random_state=rng)


def _random_stack(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([random_unitary(n, rng) for _ in range(count)])


def stacked_response(e_hat: np.ndarray, matrices: np.ndarray) -> np.ndarray:
    """Stacked sensing matrix F̂ = [ÊΘ_1; …; ÊΘ_C] of shape (C·M, N)"""
    return np.concatenate([e_hat @ theta for theta in matrices], axis=0)


def build_schedule(stage: Stage, geometry: ArrayGeometry, count: Optional[int],
                   rng: Optional[np.random.Generator] = None, *,
                   slot_span: int = 1,
                   e_hat: Optional[np.ndarray] = None,
                   max_condition: Optional[float] = None,
                   max_redraws: int = 8) -> ScatteringSchedule:
    """
    Build the scattering schedule of one stage

    Args:
        stage: "baseline" (Weyl-Heisenberg family in fixed order),
            "stage1" or "stage2" (independent random unitaries)
        geometry: array geometry supplying N
        count: number of matrices; must be N² for the baseline (None allowed)
        rng: generator for random unitaries
        slot_span: slots during which each matrix stays fixed
        e_hat: stage 2 only; when given with max_condition, draws are repeated
            while κ([ÊΘ_1; …; ÊΘ_C]) exceeds max_condition
        max_condition: conditioning bound for the stage-2 re-draws
        max_redraws: maximum number of stage-2 draws

    Returns:
        ScatteringSchedule
    """
    n = geometry.ris_elements
    if stage == "baseline":
        if count is not None and count != n * n:
            raise DimensionError(f"Baseline schedule needs N² = {n * n} matrices, got {count}")
        return ScatteringSchedule(stage, weyl_heisenberg_basis(n), slot_span)

    if stage not in ("stage1", "stage2"):
        raise ValueError(f"Unknown stage: {stage}")
    if count is None or count < 1:
        raise DimensionError(f"{stage} schedule needs a positive matrix count, got {count}")
    if rng is None:
        raise ValueError("Random schedules need a generator")

    matrices = _random_stack(n, count, rng)
    if stage == "stage1" or e_hat is None or max_condition is None:
        return ScatteringSchedule(stage, matrices, slot_span)

    best, best_kappa = matrices, condition_number(stacked_response(e_hat, matrices))
    draws = 1
    while best_kappa > max_condition and draws < max_redraws:
        candidate = _random_stack(n, count, rng)
        kappa = condition_number(stacked_response(e_hat, candidate))
        draws += 1
        if kappa < best_kappa:
            best, best_kappa = candidate, kappa
    if best_kappa > max_condition:
        logger.debug("Stage-2 schedule still ill-conditioned after %d draws (κ=%.3e)", draws, best_kappa)
    else:
        logger.debug("Stage-2 schedule accepted after %d draw(s), κ=%.3e", draws, best_kappa)
    return ScatteringSchedule(stage, best, slot_span)


def sensing_matrix(schedule: ScatteringSchedule) -> np.ndarray:
    """Φ with row b equal to vec(Θ_b)ᵀ (column-major), shape (count, N²)"""
    return vec_stack(schedule.matrices)
