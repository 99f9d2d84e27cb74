from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import sparse as sp

from fracmeasure.errors import DimensionMismatch, NoConvergence, NotPositiveDefinite
from fracmeasure.numerics import (
    as_sym_matrix,
    cholesky_factor,
    conjugate_gradient,
    pencil_residual,
    shifted_operator,
    sym_eigendecompose,
)


def stiffness_1d(interior: int, h: float) -> sp.csr_matrix:
    main = np.full(interior, 2.0 / h)
    off = np.full(interior - 1, -1.0 / h)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def random_spd(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    return B @ B.T + n * np.eye(n)


class TestSymMatrix:
    def test_accepts_symmetric(self):
        A = as_sym_matrix(stiffness_1d(4, 0.2))
        assert A.shape == (4, 4)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError):
            as_sym_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_rectangular(self):
        with pytest.raises(DimensionMismatch):
            as_sym_matrix(np.ones((2, 3)))

    def test_rejects_zero_row(self):
        with pytest.raises(ValueError):
            as_sym_matrix(sp.csr_matrix(np.diag([1.0, 0.0])))


class TestCholesky:
    def test_identity(self):
        assert_allclose(cholesky_factor(np.eye(3)).lower, np.eye(3))

    def test_diagonal(self):
        assert_allclose(cholesky_factor(np.diag([4.0, 9.0])).lower, np.diag([2.0, 3.0]))

    def test_round_trip_1d_stiffness(self):
        A = stiffness_1d(4, 0.2)
        L = cholesky_factor(A).lower
        dense = A.toarray()
        assert np.linalg.norm(L @ L.T - dense) <= 1e-12 * np.linalg.norm(dense)

    def test_solve(self):
        A = random_spd(10)
        b = np.arange(10.0)
        assert_allclose(A @ cholesky_factor(A).solve(b), b, atol=1e-10)

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


class TestConjugateGradient:
    def test_identity_one_iteration(self):
        b = np.array([1.0, -2.0, 3.5])
        x, iterations = conjugate_gradient(sp.identity(3, format="csr"), b, full_output=True)
        assert_allclose(x, b)
        assert iterations == 1

    def test_zero_rhs(self):
        x = conjugate_gradient(stiffness_1d(5, 0.1), np.zeros(5))
        assert not np.any(x)

    def test_random_spd_residual(self):
        A = random_spd(50, seed=3)
        b = np.random.default_rng(4).standard_normal(50)
        tol = 1e-10
        x = conjugate_gradient(sp.csr_matrix(A), b, tol=tol)
        assert np.linalg.norm(A @ x - b) <= tol * np.linalg.norm(b)

    def test_no_convergence(self):
        A = stiffness_1d(200, 1.0 / 201)
        with pytest.raises(NoConvergence) as info:
            conjugate_gradient(A, np.ones(200), tol=1e-14, maxit=2, precondition=False)
        assert info.value.iterations == 2
        assert info.value.last_iterate is not None

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            conjugate_gradient(stiffness_1d(3, 0.25), np.ones(4))

    def test_shifted_operator(self):
        K = stiffness_1d(4, 0.2)
        M = sp.identity(4, format="csr")
        assert_allclose(shifted_operator(K, M, 2.5).toarray(), K.toarray() + 2.5 * np.eye(4))


class TestEigen:
    def test_diagonal_pencil(self):
        pairs = sym_eigendecompose(np.diag([1.0, 4.0]), np.eye(2))
        assert_allclose(pairs.values, [1.0, 4.0])
        assert_allclose(np.abs(pairs.vectors), np.eye(2), atol=1e-14)

    def test_identity_pencil(self):
        A = random_spd(6)
        assert_allclose(sym_eigendecompose(A, A).values, np.ones(6), rtol=1e-10)

    def test_unit_square_rayleigh_bound(self, eig8):
        assert eig8.values[0] >= 2.0 * np.pi**2

    def test_residual_and_orthonormality(self, eig8):
        residual, defect = pencil_residual(eig8.stiffness, eig8.mass, eig8)
        norm = abs(eig8.stiffness).sum(axis=1).max()
        assert residual <= 1e-8 * norm
        assert defect <= 1e-8

    def test_ascending(self, eig8):
        assert np.all(np.diff(eig8.values) >= 0.0)

    def test_indefinite_mass(self):
        with pytest.raises(NotPositiveDefinite):
            sym_eigendecompose(np.eye(2), np.diag([1.0, -1.0]))
