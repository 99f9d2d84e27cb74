"""Dense and sparse symmetric linear algebra kernels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg as la
from scipy import sparse as sp

from .errors import ConvergenceFailure, DimensionMismatch, NoConvergence, NotPositiveDefinite

logger = logging.getLogger(__name__)

# Symmetric matrices are stored in full CSR form (both triangles, mirror-consistent).
SparseSymMatrix = sp.csr_matrix

SYMMETRY_TOL = 1e-12


def as_sym_matrix(A, *, check: bool = True) -> SparseSymMatrix:
    """Return A as CSR, validating the SparseSymMatrix invariants."""

    matrix = sp.csr_matrix(A, dtype=float)
    if not check:
        return matrix
    rows, cols = matrix.shape
    if rows != cols:
        raise DimensionMismatch(f"matrix is {rows}x{cols}, expected square")
    if rows == 0:
        raise DimensionMismatch("matrix dimension must be positive")
    scale = max(abs(matrix).max(), 1.0)
    asym = abs(matrix - matrix.T)
    if asym.nnz and asym.max() > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    if np.any(np.diff(matrix.indptr) == 0):
        raise ValueError("matrix has an empty row")
    return matrix


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L·Lᵀ = A."""

    lower: np.ndarray

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b by forward then backward substitution."""

        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dimension:
            raise DimensionMismatch(f"rhs has length {b.shape[0]}, factor is {self.dimension}")
        y = la.solve_triangular(self.lower, b, lower=True)
        return la.solve_triangular(self.lower.T, y, lower=False)


def _dense(A) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A, dtype=float)


def cholesky_factor(A) -> CholeskyFactor:
    """Dense Cholesky factorization of an SPD matrix."""

    dense = _dense(A)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
        raise DimensionMismatch(f"matrix has shape {dense.shape}, expected square")
    try:
        lower = la.cholesky(dense, lower=True, check_finite=True)
    except la.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return CholeskyFactor(lower=lower)


def jacobi_preconditioner(A) -> np.ndarray:
    """Inverse diagonal of A, used as a diagonal scaling preconditioner."""

    diagonal = np.asarray(A.diagonal(), dtype=float)
    if np.any(diagonal <= 0.0):
        raise NotPositiveDefinite("non-positive diagonal entry")
    return 1.0 / diagonal


def conjugate_gradient(
    A,
    b: np.ndarray,
    tol: float = 1e-10,
    maxit: int | None = None,
    *,
    x0: np.ndarray | None = None,
    precondition: bool = True,
    full_output: bool = False,
):
    """Jacobi-preconditioned CG returning x with ‖A x − b‖₂ ≤ tol·‖b‖₂.

    Inner products are plain ``numpy.dot`` calls on contiguous float64
    vectors, so the reduction order is fixed by the array layout and the
    result is reproducible run to run. The stopping test is always confirmed
    on the recomputed residual ``b − A x``; if the recursive residual has
    drifted the iteration restarts from the current iterate.
    """

    if tol <= 0.0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"matrix {A.shape} does not match rhs length {n}")
    if maxit is None:
        maxit = 10 * n + 100

    b_norm = float(np.linalg.norm(b))
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if b_norm == 0.0:
        x = np.zeros(n)
        return (x, 0) if full_output else x

    threshold = tol * b_norm
    inv_diag = jacobi_preconditioner(A) if precondition else np.ones(n)

    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r, z))
    iterations = 0
    residual = float(np.linalg.norm(r))

    while iterations < maxit:
        if residual <= threshold:
            true_residual = float(np.linalg.norm(b - A @ x))
            if true_residual <= threshold:
                residual = true_residual
                break
            r = b - A @ x
            z = inv_diag * r
            p = z.copy()
            rz = float(np.dot(r, z))
            residual = true_residual
        Ap = A @ p
        curvature = float(np.dot(p, Ap))
        if curvature <= 0.0:
            raise NotPositiveDefinite("CG encountered non-positive curvature")
        step = rz / curvature
        x += step * p
        r -= step * Ap
        z = inv_diag * r
        rz_next = float(np.dot(r, z))
        p = z + (rz_next / rz) * p
        rz = rz_next
        residual = float(np.linalg.norm(r))
        iterations += 1
    else:
        residual = float(np.linalg.norm(b - A @ x))
        if residual > threshold:
            raise NoConvergence(
                f"CG did not reach relative residual {tol:g} in {maxit} iterations",
                iterations=maxit,
                residual=residual / b_norm,
                last_iterate=x,
            )

    logger.debug("CG converged in %d iterations (relative residual %.3e)", iterations, residual / b_norm)
    return (x, iterations) if full_output else x


@dataclass(frozen=True)
class EigenPairs:
    """All eigenpairs of a symmetric definite pencil, values ascending."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eigendecompose(K, M) -> EigenPairs:
    """Solve K Φ = Λ M Φ densely; Φ is M-orthonormal and Λ ascending.

    LAPACK's generalized driver reduces the pencil with the Cholesky factor of
    M and diagonalizes the resulting standard symmetric matrix
    (tridiagonalization plus implicit QL), which is deterministic for a fixed
    input.
    """

    K_dense = _dense(K)
    M_dense = _dense(M)
    if K_dense.shape != M_dense.shape or K_dense.shape[0] != K_dense.shape[1]:
        raise DimensionMismatch(f"pencil shapes {K_dense.shape} and {M_dense.shape} differ")
    try:
        values, vectors = la.eigh(K_dense, M_dense)
    except la.LinAlgError as exc:
        message = str(exc)
        if "positive definite" in message:
            raise NotPositiveDefinite(message) from exc
        raise ConvergenceFailure(message) from exc
    if values[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {values[0]:.3e} is not positive")
    logger.info("dense eigensolve: N=%d, spectrum [%.6g, %.6g]", values.size, values[0], values[-1])
    return EigenPairs(values=values, vectors=np.asfortranarray(vectors))


def shifted_operator(K, M, shift: float) -> SparseSymMatrix:
    """Return K + shift·M in CSR form."""

    return sp.csr_matrix(K + shift * M)


def pencil_residual(K, M, pairs: EigenPairs) -> Tuple[float, float]:
    """Max eigen residual ‖KΦ_n − Λ_n MΦ_n‖₂ and M-orthonormality defect."""

    Phi = pairs.vectors
    residual = K @ Phi - (M @ Phi) * pairs.values[np.newaxis, :]
    gram = Phi.T @ (M @ Phi)
    defect = np.abs(gram - np.eye(gram.shape[0])).max()
    return float(np.linalg.norm(residual, axis=0).max()), float(defect)
