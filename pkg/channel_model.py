"""
Channel model module
Responsible for steering vectors, Saleh-Valenzuela path sampling and channel assembly
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from errors import ConfigError
from numerics import complex_gaussian, kron
from schemas import ArrayGeometry, ExperimentConfig

logger = logging.getLogger(__name__)


def _check_angle(value: float, name: str) -> None:
    if not 0.0 <= value <= math.pi:
        raise ValueError(f"{name} must lie in [0, π], got {value}")


def steering_bs(iota: float, m_count: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """ULA response exp(-j2π (d/λ) cos(ι) m), m = 0..m_count-1"""
    _check_angle(iota, "BS elevation")
    m = np.arange(m_count)
    return np.exp(-2j * np.pi * d_over_lambda * np.cos(iota) * m)


def steering_ris(iota: float, phi: float, n1: int, n2: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """UPA response a(ι, φ) = a_1(sin φ cos ι) ⊗ a_2(sin ι), length n1·n2"""
    _check_angle(iota, "RIS elevation")
    _check_angle(phi, "RIS azimuth")
    first = np.exp(-2j * np.pi * d_over_lambda * np.sin(phi) * np.cos(iota) * np.arange(n1))
    second = np.exp(-2j * np.pi * d_over_lambda * np.sin(iota) * np.arange(n2))
    return np.kron(first, second)


def ris_steering_matrix(iotas, phis, n1: int, n2: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """Stack RIS steering vectors for paired angles as columns (N × len(iotas))"""
    iotas = np.asarray(iotas, dtype=float).ravel()
    phis = np.asarray(phis, dtype=float).ravel()
    if iotas.shape != phis.shape:
        raise ValueError("Elevation and azimuth lists must have equal length")
    if np.any((iotas < 0.0) | (iotas > math.pi)) or np.any((phis < 0.0) | (phis > math.pi)):
        raise ValueError("RIS angles must lie in [0, π]")
    first = np.exp(-2j * np.pi * d_over_lambda * np.outer(np.arange(n1), np.sin(phis) * np.cos(iotas)))
    second = np.exp(-2j * np.pi * d_over_lambda * np.outer(np.arange(n2), np.sin(iotas)))
    # row n1_index·n2 + n2_index, matching np.kron(first, second)
    return (first[:, None, :] * second[None, :, :]).reshape(n1 * n2, iotas.size)


def bs_steering_matrix(iotas, m_count: int, d_over_lambda: float = 0.5) -> np.ndarray:
    """Stack BS steering vectors as columns (m_count × len(iotas))"""
    iotas = np.asarray(iotas, dtype=float).ravel()
    if iotas.size == 0:
        return np.zeros((m_count, 0), dtype=complex)
    return np.column_stack([steering_bs(i, m_count, d_over_lambda) for i in iotas])


def path_loss_db(fc_ghz: float, dist_m: float, beta: float, shadow_sigma_db: float,
                 rng: Optional[np.random.Generator] = None) -> float:
    """
    Log-distance path loss PL = 32.4 + 20 log10(fc) + 10 β log10(d) + ξ

    Args:
        fc_ghz: carrier frequency in GHz
        dist_m: link distance in meters
        beta: path-loss exponent
        shadow_sigma_db: standard deviation of ξ (2 dB gives variance 4)
        rng: generator for ξ; required when shadow_sigma_db > 0

    Returns:
        Path loss in dB
    """
    if fc_ghz <= 0 or dist_m <= 0:
        raise ValueError("Carrier frequency and distance must be positive")
    shadow = 0.0
    if shadow_sigma_db > 0:
        if rng is None:
            raise ValueError("A generator is required when shadowing is enabled")
        shadow = rng.normal(0.0, shadow_sigma_db)
    return 32.4 + 20.0 * math.log10(fc_ghz) + 10.0 * beta * math.log10(dist_m) + shadow


@dataclass(frozen=True)
class PathParams:
    """
    Sampled multipath parameters

    BS-RIS paths use 1-D arrays of length L; user paths use K×U_k arrays.
    """
    bs_ris_gains: np.ndarray
    bs_elevations: np.ndarray
    ris_elevations: np.ndarray
    ris_azimuths: np.ndarray
    user_gains: np.ndarray
    user_elevations: np.ndarray
    user_azimuths: np.ndarray

    def __post_init__(self):
        if np.size(self.bs_ris_gains) < 1 or np.shape(self.user_gains)[-1] < 1:
            raise ValueError("At least one path per link is required")
        for name in ("bs_elevations", "ris_elevations", "ris_azimuths",
                     "user_elevations", "user_azimuths"):
            values = np.asarray(getattr(self, name))
            if np.any(values < 0.0) or np.any(values > math.pi):
                raise ValueError(f"{name} must lie in [0, π]")

    @property
    def path_count(self) -> int:
        return int(np.size(self.bs_ris_gains))

    @property
    def user_count(self) -> int:
        return int(np.shape(self.user_gains)[0])


@dataclass(frozen=True)
class ChannelRealization:
    """
    Assembled channels for one trial

    bs_ris is E (M×N), rx_link is E_R (M_R×N), tx_link is E_T (M_T×N) and
    ris_user holds h_k as rows (K×N).
    """
    bs_ris: np.ndarray
    rx_link: np.ndarray
    tx_link: np.ndarray
    ris_user: np.ndarray
    paths: PathParams
    geometry: ArrayGeometry
    seed: Optional[int] = field(default=None)


def _uniform_angles(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform angles on (0, π); exact zero draws are re-sampled"""
    angles = rng.uniform(0.0, math.pi, size)
    zero = angles == 0.0
    while np.any(zero):
        angles[zero] = rng.uniform(0.0, math.pi, int(np.sum(zero)))
        zero = angles == 0.0
    return angles


def _link_variance(cfg: ExperimentConfig, dist_m: float, beta: float, rng) -> float:
    pl = path_loss_db(cfg.carrier_ghz, dist_m, beta, cfg.shadowing_db, rng)
    # path loss attenuates: variance 10^(-PL/10)
    return 10.0 ** (-pl / 10.0)


def _on_grid_bs_elevations(rng, count: int, geometry: ArrayGeometry) -> np.ndarray:
    """Elevations on distinct, non-adjacent DFT bins of the receive subarray"""
    m_r, ratio = geometry.rx_antennas, geometry.spacing
    candidates = []
    for k in range(m_r):
        delta = k / m_r if k / m_r <= ratio else (k - m_r) / m_r
        if abs(delta) < ratio:
            candidates.append(k)
    chosen: List[int] = []
    for k in rng.permutation(candidates):
        if all(min((k - c) % m_r, (c - k) % m_r) > 1 for c in chosen):
            chosen.append(int(k))
        if len(chosen) == count:
            break
    if len(chosen) < count:
        raise ConfigError(f"Cannot place {count} separated on-grid paths on {m_r} bins")
    deltas = np.array([k / m_r if k / m_r <= ratio else (k - m_r) / m_r for k in chosen])
    return np.arccos(np.clip(deltas / ratio, -1.0, 1.0))


def _on_grid_ris_angles(rng, count: int, elevation_grid: int, azimuth_grid: int):
    """RIS angle pairs drawn from the stage-1 search grid (endpoints excluded)"""
    i = rng.integers(1, elevation_grid, count)
    j = rng.integers(1, azimuth_grid, count)
    return math.pi * i / elevation_grid, math.pi * j / azimuth_grid


def sample_paths(cfg: ExperimentConfig, rng: np.random.Generator,
                 geometry: Optional[ArrayGeometry] = None) -> PathParams:
    """
    Draw BS-RIS and RIS-user path parameters

    Angles are uniform on [0, π]; gains are CN(0, 10^(-PL/10)) with one
    shadowing draw per link. With cfg.on_grid the BS-RIS angles are snapped
    to the estimator grids of the given geometry.
    """
    paths, users, user_paths = cfg.bs_ris_paths, cfg.users, cfg.user_paths

    variance = _link_variance(cfg, cfg.bs_ris_distance_m, cfg.bs_ris_exponent, rng)
    bs_ris_gains = complex_gaussian(rng, paths, variance)
    if cfg.on_grid:
        if geometry is None:
            raise ConfigError("On-grid sampling needs the array geometry")
        bs_elevations = _on_grid_bs_elevations(rng, paths, geometry)
        ris_elevations, ris_azimuths = _on_grid_ris_angles(
            rng, paths, cfg.stage1.elevation_grid, cfg.stage1.azimuth_grid
        )
    else:
        bs_elevations = _uniform_angles(rng, paths)
        ris_elevations = _uniform_angles(rng, paths)
        ris_azimuths = _uniform_angles(rng, paths)

    user_gains = np.empty((users, user_paths), dtype=complex)
    for k in range(users):
        user_variance = _link_variance(cfg, cfg.ris_user_distance_m, cfg.ris_user_exponent, rng)
        user_gains[k] = complex_gaussian(rng, user_paths, user_variance)
    user_elevations = _uniform_angles(rng, (users, user_paths))
    user_azimuths = _uniform_angles(rng, (users, user_paths))

    return PathParams(
        bs_ris_gains=bs_ris_gains,
        bs_elevations=np.asarray(bs_elevations, dtype=float),
        ris_elevations=np.asarray(ris_elevations, dtype=float),
        ris_azimuths=np.asarray(ris_azimuths, dtype=float),
        user_gains=user_gains,
        user_elevations=user_elevations,
        user_azimuths=user_azimuths,
    )


def assemble_channels(p: PathParams, g: ArrayGeometry, seed: Optional[int] = None) -> ChannelRealization:
    """
    Build E, E_R, E_T and every h_k from path parameters

    Transmit and receive subarrays both use local element index origin 0, so
    E_R and E_T equal the first M_R and M_T rows of E.
    """
    n1, n2, ratio = g.ris_rows, g.ris_cols, g.spacing
    ris = ris_steering_matrix(p.ris_elevations, p.ris_azimuths, n1, n2, ratio)
    gamma = np.diag(np.asarray(p.bs_ris_gains, dtype=complex))
    right = gamma @ ris.T

    bs_ris = bs_steering_matrix(p.bs_elevations, g.bs_antennas, ratio) @ right
    rx_link = bs_steering_matrix(p.bs_elevations, g.rx_antennas, ratio) @ right
    tx_link = bs_steering_matrix(p.bs_elevations, g.tx_antennas, ratio) @ right

    ris_user = np.empty((p.user_count, g.ris_elements), dtype=complex)
    for k in range(p.user_count):
        a_k = ris_steering_matrix(p.user_elevations[k], p.user_azimuths[k], n1, n2, ratio)
        ris_user[k] = a_k @ p.user_gains[k]

    return ChannelRealization(
        bs_ris=bs_ris,
        rx_link=rx_link,
        tx_link=tx_link,
        ris_user=ris_user,
        paths=p,
        geometry=g,
        seed=seed,
    )


def cascaded_channel(h_k, e) -> np.ndarray:
    """Cascaded channel H_k = h_kᵀ ⊗ E (M × N²)"""
    h_row = np.asarray(h_k, dtype=complex).reshape(1, -1)
    e = np.asarray(e, dtype=complex)
    if h_row.shape[1] != e.shape[1]:
        raise ValueError(f"h has {h_row.shape[1]} entries but E has {e.shape[1]} columns")
    return kron(h_row, e)


def cascaded_channels(ch: ChannelRealization) -> List[np.ndarray]:
    """True cascaded channel of every user"""
    return [cascaded_channel(h, ch.bs_ris) for h in ch.ris_user]
