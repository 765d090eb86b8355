"""Shared fixtures for the estimator and harness tests."""
import math

import numpy as np
import pytest

from channel_model import PathParams, assemble_channels
from schemas import ArrayGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def geometry():
    """M = 16 split 8/8, 4×4 RIS"""
    return ArrayGeometry(bs_antennas=16, rx_antennas=8, tx_antennas=8, ris_rows=4, ris_cols=4)


def bin_elevation(bin_index: int, rx_antennas: int, spacing: float = 0.5) -> float:
    """Elevation whose spatial frequency falls exactly on a beamspace bin"""
    delta = bin_index / rx_antennas
    if delta > spacing:
        delta -= 1.0
    return math.acos(delta / spacing)


@pytest.fixture
def on_bin():
    return bin_elevation


@pytest.fixture
def make_channel():
    """Factory for realizations with chosen BS-RIS angles and gains"""

    def _make(geometry, bs_elevations, ris_elevations, ris_azimuths, gains,
              users=1, user_paths=2, rng=None):
        rng = rng or np.random.default_rng(7)
        paths = PathParams(
            bs_ris_gains=np.asarray(gains, dtype=complex),
            bs_elevations=np.asarray(bs_elevations, dtype=float),
            ris_elevations=np.asarray(ris_elevations, dtype=float),
            ris_azimuths=np.asarray(ris_azimuths, dtype=float),
            user_gains=rng.standard_normal((users, user_paths)) + 1j * rng.standard_normal((users, user_paths)),
            user_elevations=rng.uniform(0.1, 3.0, (users, user_paths)),
            user_azimuths=rng.uniform(0.1, 3.0, (users, user_paths)),
        )
        return assemble_channels(paths, geometry)

    return _make
