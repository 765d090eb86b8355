"""
Full-duplex BS-RIS channel estimation module
Responsible for BS elevations (beamspace peaks and rotation), RIS angle search,
gain recovery and reconstruction of the BS-RIS channel Ê
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

import numpy as np

from channel_model import ChannelRealization, bs_steering_matrix, ris_steering_matrix
from errors import (
    DimensionError,
    FlatObjectiveError,
    GainResolutionError,
    RankDeficiencyError,
    RotationBoundaryWarning,
    ZeroSignalError,
)
from numerics import complex_gaussian, dft_matrix, numerical_rank, pinv, svd, unvec_stack
from scattering import build_schedule, sensing_matrix
from schemas import ArrayGeometry, FdStage1Config

logger = logging.getLogger(__name__)

# Grid columns evaluated per batch in the RIS angle search
GRID_CHUNK = 2048
_TINY = np.finfo(float).tiny


@dataclass
class Stage1Result:
    """Stage-1 estimates and diagnostics"""
    path_count: int
    bs_elevations: np.ndarray
    rotations: np.ndarray
    ris_elevations: np.ndarray
    ris_azimuths: np.ndarray
    correlations: np.ndarray
    gains: np.ndarray
    gain_products: np.ndarray
    e_hat: np.ndarray
    row_powers: np.ndarray
    pilot_slots: int = 0
    bins: List[int] = field(default_factory=list)


def pilot_matrix(tx_antennas: int, slots: int) -> np.ndarray:
    """First tx_antennas rows of the slots-point DFT matrix, so S·Sᴴ = I"""
    if slots < tx_antennas:
        raise DimensionError(f"Need T >= M_T for S·Sᴴ = I, got T={slots}, M_T={tx_antennas}")
    return dft_matrix(slots)[:tx_antennas, :]


def simulate_fd_rx(ch: ChannelRealization, sched, cfg: FdStage1Config,
                   rng: Optional[np.random.Generator] = None,
                   pilots: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Received full-duplex training blocks Y_b = √P·E_R·Θ_b·E_Tᵀ·S + N_b

    Returns:
        Array of shape (B, M_R, T)
    """
    g = ch.geometry
    if sched.ris_elements != g.ris_elements:
        raise DimensionError(f"Schedule is for N={sched.ris_elements}, channel has N={g.ris_elements}")
    if pilots is None:
        s = pilot_matrix(g.tx_antennas, cfg.resolved_slots(g, ch.paths.path_count))
    else:
        s = np.asarray(pilots, dtype=complex)
    if s.shape[0] != g.tx_antennas:
        raise DimensionError(f"Pilot matrix must have M_T={g.tx_antennas} rows, got {s.shape[0]}")

    loop = np.matmul(ch.rx_link @ sched.matrices, ch.tx_link.T)  # (B, M_R, M_T)
    received = math.sqrt(cfg.transmit_power_w) * (loop @ s)
    if cfg.noise_var_w > 0:
        if rng is None:
            raise ValueError("A generator is required for noisy simulation")
        received = received + complex_gaussian(rng, received.shape, cfg.noise_var_w)
    return received


def decorrelate_pilots(y_blocks, s) -> np.ndarray:
    """Z_b = Y_b·Sᴴ for every block"""
    y = np.asarray(y_blocks, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if y.ndim != 3 or y.shape[2] != s.shape[1]:
        raise DimensionError(f"Blocks of shape {y.shape} do not match pilots {s.shape}")
    return y @ s.conj().T


def _concat_blocks(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 2:
        return z
    if z.ndim != 3 or z.shape[0] < 1:
        raise DimensionError("Expected at least one M_R×M_T block")
    # [Z_1, …, Z_B] side by side
    return np.concatenate(list(z), axis=1)


def beamspace_row_powers(z) -> np.ndarray:
    """Row powers of Ȳ = U_{M_R}ᴴ·[Z_1, …, Z_B]"""
    stacked = _concat_blocks(z)
    u = dft_matrix(stacked.shape[0])
    return np.sum(np.abs(u.conj().T @ stacked) ** 2, axis=1)


def detect_bs_elevations(z, cfg: FdStage1Config) -> Tuple[int, np.ndarray]:
    """
    Locate the prominent beamspace bins

    A bin is a peak when its power is strictly above its left neighbour and not
    below its right one (circularly) and reaches peak_threshold·max. With
    known_paths set, the strongest known_paths peaks are returned, padded with
    the strongest remaining bins.

    Returns:
        (L̂, 0-based bin indices sorted by decreasing power)
    """
    powers = beamspace_row_powers(z)
    peak = powers.max()
    if peak <= _TINY:
        raise ZeroSignalError("All beamspace row powers are below the numerical floor")

    if powers.size == 1:
        return 1, np.array([0])
    local = (powers > np.roll(powers, 1)) & (powers >= np.roll(powers, -1))
    candidates = np.flatnonzero(local)
    candidates = candidates[np.argsort(-powers[candidates], kind="stable")]

    if cfg.known_paths is not None:
        chosen = list(candidates[:cfg.known_paths])
        if len(chosen) < cfg.known_paths:
            for k in np.argsort(-powers, kind="stable"):
                if len(chosen) == min(cfg.known_paths, powers.size):
                    break
                if k not in chosen:
                    chosen.append(k)
        bins = np.array(chosen, dtype=int)
    else:
        bins = candidates[powers[candidates] >= cfg.peak_threshold * peak]
        if bins.size == 0:
            bins = np.array([int(np.argmax(powers))])
    logger.debug("Detected %d BS path(s) at bins %s", bins.size, bins.tolist())
    return int(bins.size), bins


def rotation_grid(rx_antennas: int, step: float) -> np.ndarray:
    """Rotations iε within ±1/(2M_R), plus both interval ends"""
    if step <= 0:
        raise ValueError("Rotation step must be positive")
    half = 1.0 / (2 * rx_antennas)
    count = int(math.floor(half / step + 1e-9))
    grid = np.concatenate([np.arange(-count, count + 1) * step, [-half, half]])
    return np.unique(grid)


def rotation_objective(z, bin_index: int, nu) -> np.ndarray:
    """Power of row bin_index of U_{M_R}ᴴ·Λ(ν)ᴴ·[Z_1, …, Z_B] for each ν"""
    stacked = _concat_blocks(z)
    m_r = stacked.shape[0]
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    m = np.arange(m_r)
    w = np.exp(2j * np.pi * np.outer(bin_index / m_r - nu, m)) / math.sqrt(m_r)
    return np.sum(np.abs(w @ stacked) ** 2, axis=1)


def bin_to_elevation(bin_index: int, nu: float, rx_antennas: int, spacing: float = 0.5) -> float:
    """Map a beamspace bin and rotation to an elevation through the two-branch arccos"""
    if bin_index / rx_antennas <= spacing:
        delta = (bin_index - rx_antennas * nu) / rx_antennas
    else:
        delta = (bin_index - rx_antennas * nu - rx_antennas) / rx_antennas
    return float(np.arccos(np.clip(delta / spacing, -1.0, 1.0)))


def refine_elevation(z, bin_index: int, cfg: FdStage1Config,
                     spacing: float = 0.5) -> Tuple[float, float]:
    """
    Grid-search the rotation ν that maximizes the bin's beamspace power

    Returns:
        (ν̂, ι̂)
    """
    stacked = _concat_blocks(z)
    m_r = stacked.shape[0]
    if not 0 <= bin_index < m_r:
        raise ValueError(f"Bin index {bin_index} outside [0, {m_r})")
    step = cfg.rotation_step if cfg.rotation_step is not None else 1.0 / (16 * m_r)
    grid = rotation_grid(m_r, step)
    objective = rotation_objective(stacked, bin_index, grid)
    nu = float(grid[int(np.argmax(objective))])
    if abs(nu) >= 1.0 / (2 * m_r) - 1e-12:
        warnings.warn(
            f"Rotation for bin {bin_index} sits on the search boundary (ν={nu:.4g}); "
            "the path may belong to a neighbouring bin",
            RotationBoundaryWarning,
            stacklevel=2,
        )
    return nu, bin_to_elevation(bin_index, nu, m_r, spacing)


def reconstruct_B(iotas, geometry: ArrayGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """Receive and transmit subarray steering matrices (M_R×L̂, M_T×L̂)"""
    iotas = np.atleast_1d(np.asarray(iotas, dtype=float))
    if iotas.size < 1:
        raise ValueError("At least one elevation is required")
    return (
        bs_steering_matrix(iotas, geometry.rx_antennas, geometry.spacing),
        bs_steering_matrix(iotas, geometry.tx_antennas, geometry.spacing),
    )


def project_to_path_domain(z, b_r: np.ndarray, b_t: np.ndarray) -> np.ndarray:
    """Ỹ_b = B̂_R⁺·Z_b·(B̂_Tᵀ)⁺ ≈ √P·Γ·AᵀΘ_bA·Γ, shape (B, L̂, L̂)"""
    paths = b_r.shape[1]
    if numerical_rank(b_r) < paths or numerical_rank(b_t) < paths:
        raise RankDeficiencyError(
            f"Steering matrices of shape {b_r.shape} and {b_t.shape} are not full column rank"
        )
    z = np.asarray(z, dtype=complex)
    return pinv(b_r) @ z @ pinv(b_t.T)


def _angle_grid(cfg: FdStage1Config) -> Tuple[np.ndarray, np.ndarray]:
    iota = math.pi * np.arange(cfg.elevation_grid) / cfg.elevation_grid
    phi = math.pi * np.arange(cfg.azimuth_grid) / cfg.azimuth_grid
    # flattened index i·G_φ + j
    return np.repeat(iota, phi.size), np.tile(phi, iota.size)


def _correlations(q: np.ndarray, thetas: np.ndarray, iotas: np.ndarray, phis: np.ndarray,
                  geometry: ArrayGeometry) -> np.ndarray:
    """|qᴴ·r| / (‖q‖·‖r‖) with r = [aᵀΘ_b a]_b for every candidate, shape (rows of q, G)"""
    q_norm = np.linalg.norm(q, axis=1)
    a = ris_steering_matrix(iotas, phis, geometry.ris_rows, geometry.ris_cols, geometry.spacing)
    response = np.sum(a[None, :, :] * (thetas @ a), axis=1)  # aᵀΘ_b a, (B, G)
    r_norm = np.linalg.norm(response, axis=0)
    denom = np.outer(q_norm, r_norm)
    corr = np.zeros(denom.shape)
    valid = denom > _TINY
    corr[valid] = np.abs(q.conj() @ response)[valid] / denom[valid]
    return corr


def _local_grid(center: float, cell: float, factor: int) -> np.ndarray:
    offsets = cell * np.arange(-factor, factor + 1) / factor
    return np.clip(center + offsets, 0.0, math.pi)


def estimate_ris_angles(y_tilde, phi: np.ndarray, cfg: FdStage1Config,
                        geometry: ArrayGeometry) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Correlation grid search for the RIS angle pair of every detected path

    For path m, q_m = [Ỹ_1[m,m], …, Ỹ_B[m,m]] is compared with Φ·(a⊗a) over
    the G_ι×G_φ grid; ties resolve to the smallest flattened grid index.
    With cfg.angle_refinement = R > 0 each winner is then searched again on a
    (2R+1)×(2R+1) grid spanning one coarse cell on either side; the coarse
    point is kept unless a local candidate correlates strictly better.

    Returns:
        (elevations, azimuths, best correlations)
    """
    y_tilde = np.asarray(y_tilde, dtype=complex)
    if y_tilde.ndim != 3 or y_tilde.shape[0] != phi.shape[0]:
        raise DimensionError(f"Ỹ of shape {y_tilde.shape} does not match Φ {phi.shape}")
    n = geometry.ris_elements
    thetas = unvec_stack(phi, n, n)
    paths = y_tilde.shape[1]
    q = np.stack([y_tilde[:, m, m] for m in range(paths)])    # (L̂, B)

    grid_iota, grid_phi = _angle_grid(cfg)
    best = np.full(paths, -1.0)
    best_index = np.zeros(paths, dtype=int)
    for start in range(0, grid_iota.size, GRID_CHUNK):
        stop = min(start + GRID_CHUNK, grid_iota.size)
        corr = _correlations(q, thetas, grid_iota[start:stop], grid_phi[start:stop], geometry)
        local = np.argmax(corr, axis=1)
        values = corr[np.arange(paths), local]
        improved = values > best
        best[improved] = values[improved]
        best_index[improved] = start + local[improved]

    if np.any(best < cfg.min_correlation):
        raise FlatObjectiveError(
            f"RIS angle search peaked at correlation {best.min():.3f} "
            f"(minimum {cfg.min_correlation})"
        )
    iotas, phis = grid_iota[best_index], grid_phi[best_index]
    if cfg.angle_refinement > 0:
        iotas, phis = iotas.copy(), phis.copy()
        cell_iota, cell_phi = math.pi / cfg.elevation_grid, math.pi / cfg.azimuth_grid
        for m in range(paths):
            fine_iota = _local_grid(iotas[m], cell_iota, cfg.angle_refinement)
            fine_phi = _local_grid(phis[m], cell_phi, cfg.angle_refinement)
            cand_iota = np.repeat(fine_iota, fine_phi.size)
            cand_phi = np.tile(fine_phi, fine_iota.size)
            corr = _correlations(q[m:m + 1], thetas, cand_iota, cand_phi, geometry)[0]
            pick = int(np.argmax(corr))
            if corr[pick] > best[m]:
                best[m] = corr[pick]
                iotas[m], phis[m] = cand_iota[pick], cand_phi[pick]
        logger.debug("Refined RIS angles on a %d× finer local grid", cfg.angle_refinement)
    return iotas, phis, best


def estimate_gain_products(y_tilde, phi: np.ndarray, iotas, phis, transmit_power_w: float,
                           geometry: ArrayGeometry) -> np.ndarray:
    """
    D̂[m, n] = (√P·Φ·(a_n⊗a_m))⁺·q_{m,n} with q_{m,n} = [Ỹ_b[m, n]]_b

    Angles come from the diagonal searches and are reused for every pair.
    """
    if transmit_power_w <= 0:
        raise ValueError("Transmit power must be positive for estimation")
    y_tilde = np.asarray(y_tilde, dtype=complex)
    a = ris_steering_matrix(iotas, phis, geometry.ris_rows, geometry.ris_cols, geometry.spacing)
    thetas = unvec_stack(phi, geometry.ris_elements, geometry.ris_elements)
    # response[b, m, n] = a_mᵀ·Θ_b·a_n = vec(Θ_b)ᵀ(a_n⊗a_m)
    response = np.einsum("im,bij,jn->bmn", a, thetas, a)
    energy = np.sum(np.abs(response) ** 2, axis=0)
    if np.any(energy <= _TINY):
        raise RankDeficiencyError("Sensing response Φ·ã vanishes for an estimated angle pair")
    products = np.sum(response.conj() * y_tilde, axis=0)
    return products / (math.sqrt(transmit_power_w) * energy)


def resolve_gains_svd(d, mode: Literal["takagi", "hermitian"] = "takagi") -> np.ndarray:
    """
    Recover α̂ (up to a global sign) from the gain-product matrix D ≈ ααᵀ

    Args:
        d: L̂×L̂ gain products
        mode: "takagi" symmetrizes with (D + Dᵀ)/2 and aligns the phase of the
            dominant singular vector, exact for complex gains; "hermitian" uses
            (D + Dᴴ)/2 and √σ₁·u₁, exact for real gains only

    Returns:
        Length-L̂ gain vector
    """
    d = np.asarray(d, dtype=complex)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError(f"Gain-product matrix must be square, got {d.shape}")

    if mode == "takagi":
        sym = 0.5 * (d + d.T)
    elif mode == "hermitian":
        sym = 0.5 * (d + d.conj().T)
    else:
        raise ValueError(f"Unknown gain resolution mode: {mode}")

    u, s, vh = svd(sym)
    if s[0] <= _TINY:
        raise GainResolutionError("Gain-product matrix has no dominant component")
    u1 = u[:, 0]
    if mode == "takagi":
        # u₁ᴴ·conj(v₁), with conj(v₁) the first row of vh
        psi = 0.5 * np.angle(np.vdot(u1, vh[0]))
        return math.sqrt(s[0]) * u1 * np.exp(1j * psi)
    # principal branch: largest entry of u₁ real and positive
    pivot = u1[int(np.argmax(np.abs(u1)))]
    return math.sqrt(s[0]) * u1 * np.exp(-1j * np.angle(pivot))


def reconstruct_E(bs_elevations, ris_elevations, ris_azimuths, gains,
                  geometry: ArrayGeometry) -> np.ndarray:
    """Ê = B̂·Γ̂·Âᵀ with full-length BS steering vectors (M×N)"""
    b = bs_steering_matrix(bs_elevations, geometry.bs_antennas, geometry.spacing)
    a = ris_steering_matrix(ris_elevations, ris_azimuths,
                            geometry.ris_rows, geometry.ris_cols, geometry.spacing)
    return b @ np.diag(np.asarray(gains, dtype=complex)) @ a.T


class BsRisChannelEstimator:
    """Stage-1 estimator of the BS-RIS channel from full-duplex self-observations"""

    def __init__(self, cfg: FdStage1Config, geometry: ArrayGeometry):
        self.cfg = cfg
        self.geometry = geometry

    def subframes(self) -> int:
        return self.cfg.resolved_subframes(self.geometry)

    def slots(self, paths: Optional[int] = None) -> int:
        return self.cfg.resolved_slots(self.geometry, paths)

    def pilot_slots(self, paths: Optional[int] = None) -> int:
        return self.subframes() * self.slots(paths)

    def refine_all(self, z, bins: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Rotation refinement for every detected bin

        With deflation_passes > 0, the other paths' contributions (fitted on the
        current elevations) are removed before refining each path, cycling
        deflation_passes times from the unrotated bin elevations.
        """
        stacked = _concat_blocks(z)
        m_r, spacing = self.geometry.rx_antennas, self.geometry.spacing
        nus = np.zeros(bins.size)
        iotas = np.array([bin_to_elevation(int(k), 0.0, m_r, spacing) for k in bins])

        if self.cfg.deflation_passes == 0 or bins.size == 1:
            for l, k in enumerate(bins):
                nus[l], iotas[l] = refine_elevation(stacked, int(k), self.cfg, spacing)
            return nus, iotas

        for _ in range(self.cfg.deflation_passes):
            for l, k in enumerate(bins):
                b_r = bs_steering_matrix(iotas, m_r, spacing)
                coeffs = pinv(b_r) @ stacked
                others = np.arange(bins.size) != l
                residual = stacked - b_r[:, others] @ coeffs[others]
                nus[l], iotas[l] = refine_elevation(residual, int(k), self.cfg, spacing)
        return nus, iotas

    def estimate(self, z, phi: np.ndarray) -> Stage1Result:
        """Run the stage-1 chain on decorrelated blocks Z (B, M_R, M_T) and Φ"""
        z = np.asarray(z, dtype=complex)
        g = self.geometry
        if z.shape[1:] != (g.rx_antennas, g.tx_antennas):
            raise DimensionError(f"Blocks of shape {z.shape[1:]} do not match the BS split")

        count, bins = detect_bs_elevations(z, self.cfg)
        nus, bs_elevations = self.refine_all(z, bins)
        logger.debug("Refined rotations %s", np.round(nus, 5).tolist())

        b_r, b_t = reconstruct_B(bs_elevations, g)
        y_tilde = project_to_path_domain(z, b_r, b_t)
        ris_elevations, ris_azimuths, correlations = estimate_ris_angles(y_tilde, phi, self.cfg, g)
        products = estimate_gain_products(
            y_tilde, phi, ris_elevations, ris_azimuths, self.cfg.transmit_power_w, g
        )
        gains = resolve_gains_svd(products, self.cfg.gain_resolution)
        e_hat = reconstruct_E(bs_elevations, ris_elevations, ris_azimuths, gains, g)

        return Stage1Result(
            path_count=count,
            bs_elevations=bs_elevations,
            rotations=nus,
            ris_elevations=ris_elevations,
            ris_azimuths=ris_azimuths,
            correlations=correlations,
            gains=gains,
            gain_products=products,
            e_hat=e_hat,
            row_powers=beamspace_row_powers(z),
            bins=[int(k) for k in bins],
        )

    def run(self, ch: ChannelRealization, rng: np.random.Generator,
            paths: Optional[int] = None) -> Stage1Result:
        """Simulate the full-duplex training phase for ch and estimate Ê"""
        subframes, slots = self.subframes(), self.slots(paths)
        sched = build_schedule("stage1", self.geometry, subframes, rng, slot_span=slots)
        s = pilot_matrix(self.geometry.tx_antennas, slots)
        y = simulate_fd_rx(ch, sched, self.cfg, rng, pilots=s)
        result = self.estimate(decorrelate_pilots(y, s), sensing_matrix(sched))
        result.pilot_slots = subframes * slots
        return result
