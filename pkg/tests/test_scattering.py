"""Tests for scattering matrices and schedules."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import DimensionError
from numerics import condition_number, is_unitary
from scattering import (
    build_schedule,
    random_unitary,
    sensing_matrix,
    stacked_response,
    weyl_heisenberg_basis,
)
from schemas import ArrayGeometry


def vectorization_gram(matrices):
    v = np.stack([m.reshape(-1, order="F") for m in matrices], axis=1)
    return v.conj().T @ v


class TestWeylHeisenbergBasis:

    def test_size_one(self):
        assert_allclose(weyl_heisenberg_basis(1), [[[1.0]]])

    def test_size_two_members(self):
        basis = weyl_heisenberg_basis(2)
        shift = np.array([[0, 1], [1, 0]])
        clock = np.diag([1, -1])
        expected = [np.eye(2), shift, clock, clock @ shift]
        for got, want in zip(basis, expected):
            assert_allclose(got, want, atol=1e-12)
        assert_allclose(vectorization_gram(basis), 2 * np.eye(4), atol=1e-12)

    def test_gram_is_scaled_identity(self):
        basis = weyl_heisenberg_basis(4)
        assert basis.shape == (16, 4, 4)
        assert_allclose(vectorization_gram(basis), 4 * np.eye(16), atol=1e-10)

    def test_members_are_unitary(self):
        for theta in weyl_heisenberg_basis(5):
            assert is_unitary(theta, atol=1e-10)

    def test_cached_and_read_only(self):
        basis = weyl_heisenberg_basis(3)
        assert basis is weyl_heisenberg_basis(3)
        with pytest.raises(ValueError):
            basis[0, 0, 0] = 2.0


class TestRandomUnitary:

    def test_scalar_case(self, rng):
        theta = random_unitary(1, rng)
        assert theta.shape == (1, 1)
        assert abs(theta[0, 0]) == pytest.approx(1.0)

    def test_unitarity(self, rng):
        theta = random_unitary(6, rng)
        assert np.linalg.norm(theta.conj().T @ theta - np.eye(6)) <= 1e-9

    def test_seed_reproduces(self):
        a = random_unitary(4, np.random.default_rng(11))
        b = random_unitary(4, np.random.default_rng(11))
        assert_allclose(a, b)


class TestBuildSchedule:

    @pytest.fixture
    def small(self):
        return ArrayGeometry(bs_antennas=8, rx_antennas=4, tx_antennas=4, ris_rows=2, ris_cols=2)

    def test_baseline(self, small):
        sched = build_schedule("baseline", small, 16, slot_span=3)
        assert sched.count == 16
        assert sched.total_slots == 48
        assert sched.max_unitarity_error() <= 1e-10

    def test_baseline_count_mismatch(self, small):
        with pytest.raises(DimensionError):
            build_schedule("baseline", small, 15)

    def test_stage1(self, small, rng):
        sched = build_schedule("stage1", small, 6, rng)
        assert sched.stage == "stage1"
        assert sched.count == 6
        assert sched.max_unitarity_error() <= 1e-10

    def test_stage2_count(self, rng):
        g = ArrayGeometry(bs_antennas=8, rx_antennas=4, tx_antennas=4, ris_rows=4, ris_cols=4)
        sched = build_schedule("stage2", g, 2, rng)
        assert sched.count == 2

    def test_random_stage_needs_count(self, small, rng):
        with pytest.raises(DimensionError):
            build_schedule("stage1", small, 0, rng)

    def test_stage2_redraws_pick_best_conditioning(self, small, rng):
        e_hat = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        sched = build_schedule("stage2", small, 1, rng, e_hat=e_hat, max_condition=1.0 + 1e-9, max_redraws=5)
        # unitary Θ keeps κ(ÊΘ) = κ(Ê), so every draw is equally conditioned
        assert condition_number(stacked_response(e_hat, sched.matrices)) == pytest.approx(condition_number(e_hat))


class TestSensingMatrix:

    def test_rows_are_column_major_vectorizations(self, rng):
        g = ArrayGeometry(bs_antennas=8, rx_antennas=4, tx_antennas=4, ris_rows=3, ris_cols=1)
        sched = build_schedule("stage1", g, 4, rng)
        phi = sensing_matrix(sched)
        assert phi.shape == (4, 9)
        for row, theta in zip(phi, sched.matrices):
            assert_allclose(row, theta.reshape(-1, order="F"))

    def test_bilinear_identity_on_schedule(self, rng):
        g = ArrayGeometry(bs_antennas=8, rx_antennas=4, tx_antennas=4, ris_rows=2, ris_cols=3)
        sched = build_schedule("stage1", g, 100, rng)
        phi = sensing_matrix(sched)
        a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        a2 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        direct = np.array([a @ theta @ a2 for theta in sched.matrices])
        assert_allclose(phi @ np.kron(a2, a), direct, atol=1e-12)
