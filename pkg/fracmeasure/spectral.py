"""Discrete spectral calculus of the Dirichlet Laplacian.

Everything here works in the eigenbasis of the pencil (K, M): a finite
element function with coefficients ``c`` has eigen-coefficients
``ŵ = Φᵀ M c`` and a load vector ``g`` has ``ĝ = Φᵀ g``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DimensionMismatch, NumericalError
from .fem import (
    FEFunction,
    ScalarField,
    assemble_mass,
    assemble_stiffness,
    l2_error,
    l2_norm,
    project_l2,
    transfer,
)
from .mesh import Mesh
from .numerics import SparseSymMatrix, sym_eigendecompose

logger = logging.getLogger(__name__)

PARAMETER_MARGIN = 1e-10
IDEAL_THEORY_LIMIT = 0.75
DEFAULT_MAX_DENSE_DIM = 5000


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """All eigenpairs (Λ, Φ) of the discrete Laplacian on ``mesh``."""

    values: np.ndarray
    vectors: np.ndarray
    stiffness: SparseSymMatrix
    mass: SparseSymMatrix
    mesh: Mesh

    def __post_init__(self) -> None:
        n = self.mesh.num_interior
        if self.values.shape != (n,) or self.vectors.shape != (n, n):
            raise DimensionMismatch(f"eigenpairs do not match N_h={n}")
        self.values.setflags(write=False)
        self.vectors.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self.values.size

    @property
    def smallest(self) -> float:
        return float(self.values[0])

    @property
    def largest(self) -> float:
        return float(self.values[-1])

    def poincare_constant(self) -> float:
        """Discrete estimate Λ_1^{-1/2} of the Poincaré constant."""

        return 1.0 / math.sqrt(self.smallest)


def decompose(m: Mesh, *, max_dim: int = DEFAULT_MAX_DENSE_DIM) -> EigenDecomposition:
    """Assemble K and M on ``m`` and compute every eigenpair densely."""

    n = m.num_interior
    if n == 0:
        raise DimensionMismatch("mesh has no interior vertices")
    if n > max_dim:
        raise NumericalError(f"dense eigendecomposition of N_h={n} exceeds max_dense_dim={max_dim}")
    K = assemble_stiffness(m)
    M = assemble_mass(m)
    started = time.perf_counter()
    pairs = sym_eigendecompose(K, M)
    logger.info("eigendecomposition of N_h=%d took %.2fs", n, time.perf_counter() - started)
    return EigenDecomposition(values=pairs.values, vectors=pairs.vectors, stiffness=K, mass=M, mesh=m)


class FracParams(BaseModel):
    """Exponent s and dual shift θ of the (s−θ, s+θ) formulation."""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., description="fractional exponent, s in (1/2, 1)")
    theta: float = Field(..., description="dual shift, θ in (1-s, s); defaults to the midpoint")

    @model_validator(mode="before")
    @classmethod
    def _default_theta(cls, data):
        if isinstance(data, dict) and data.get("theta") is None and data.get("s") is not None:
            s = float(data["s"])
            data = {**data, "theta": 0.5 * ((1.0 - s) + s)}
        return data

    @model_validator(mode="after")
    def _check_ranges(self) -> "FracParams":
        s, theta = self.s, self.theta
        if not (0.5 + PARAMETER_MARGIN < s < 1.0 - PARAMETER_MARGIN):
            raise ValueError(f"s={s} must lie in (1/2, 1)")
        if not (1.0 - s + PARAMETER_MARGIN < theta < s - PARAMETER_MARGIN):
            raise ValueError(f"theta={theta} must lie in (1-s, s) = ({1.0 - s:g}, {s:g})")
        return self

    @property
    def trial_order(self) -> float:
        """s − θ ∈ (0, ½)."""

        return self.s - self.theta

    @property
    def test_order(self) -> float:
        """s + θ ∈ (1, 2s)."""

        return self.s + self.theta

    @property
    def within_ideal_theory(self) -> bool:
        return self.s < IDEAL_THEORY_LIMIT


Exponent = Union[FracParams, float]


def _exponent(p: Exponent) -> float:
    if isinstance(p, FracParams):
        if not p.within_ideal_theory:
            logger.warning("s=%g is outside (1/2, 3/4); ideal-scheme error bounds do not apply", p.s)
        return p.s
    return float(p)


def _check_function(E: EigenDecomposition, w: FEFunction) -> None:
    if w.mesh is not E.mesh:
        raise DimensionMismatch("function does not live on the decomposition's mesh")


def _check_load(E: EigenDecomposition, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (E.dimension,):
        raise DimensionMismatch(f"load has shape {g.shape}, expected ({E.dimension},)")
    return g


def coefficients(E: EigenDecomposition, w: FEFunction) -> np.ndarray:
    """Eigen-coefficients ŵ = Φᵀ M c."""

    _check_function(E, w)
    return E.vectors.T @ (E.mass @ w.coeffs)


def load_coefficients(E: EigenDecomposition, g: np.ndarray) -> np.ndarray:
    """ĝ = Φᵀ g for a load vector g."""

    return E.vectors.T @ _check_load(E, g)


def synthesize(E: EigenDecomposition, hat: np.ndarray) -> FEFunction:
    """Finite element function Σ hat_n Φ_n."""

    return FEFunction(E.mesh, E.vectors @ hat)


def eigenfunction(E: EigenDecomposition, index: int) -> FEFunction:
    """Φ_index with 0-based index."""

    return FEFunction(E.mesh, E.vectors[:, index])


def apply_fractional_power(E: EigenDecomposition, r: float, w: FEFunction) -> FEFunction:
    """(−Δ_h)^r w."""

    return synthesize(E, E.values**r * coefficients(E, w))


def discrete_norm(E: EigenDecomposition, r: float, w: FEFunction) -> float:
    """(Σ Λ_n^r ŵ_n²)^{1/2}."""

    hat = coefficients(E, w)
    return math.sqrt(float(np.sum(E.values**r * hat * hat)))


def dual_load_norm(E: EigenDecomposition, r: float, g: np.ndarray) -> float:
    """Discrete H^{-r} norm (Σ Λ_n^{-r} ĝ_n²)^{1/2} of the functional v ↦ gᵀc(v)."""

    if r <= 0.0:
        raise ValueError("r must be positive")
    hat = load_coefficients(E, g)
    return math.sqrt(float(np.sum(E.values ** (-r) * hat * hat)))


def solve_ideal(E: EigenDecomposition, p: Exponent, g: np.ndarray) -> FEFunction:
    """Ideal scheme: û_n = Λ_n^{-s} ĝ_n.

    ``p`` is either FracParams or a bare exponent (1.0 gives the classical
    Galerkin solution of K c = g).
    """

    s = _exponent(p)
    return synthesize(E, E.values ** (-s) * load_coefficients(E, g))


def bilinear_form(E: EigenDecomposition, p: Exponent, u: FEFunction, v: FEFunction) -> float:
    """A_h(u, v) = Σ Λ_n^s û_n v̂_n."""

    s = p.s if isinstance(p, FracParams) else float(p)
    return float(np.sum(E.values**s * coefficients(E, u) * coefficients(E, v)))


def operator_power_error(
    E: EigenDecomposition,
    r: float,
    F: ScalarField,
    *,
    reference: Union[ScalarField, EigenDecomposition],
    order: int = 5,
) -> float:
    """‖(−Δ)^{-r}F − (−Δ_h)^{-r}P_h F‖_{L²}.

    ``reference`` is either the exact (−Δ)^{-r}F as a field, or the
    decomposition of a finer nested mesh whose discrete solution stands in for
    it; in the latter case the coarse solution is interpolated onto that mesh.
    """

    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    coarse = apply_fractional_power(E, -r, project_l2(E.mesh, E.mass, F, order=order))
    if isinstance(reference, EigenDecomposition):
        fine = apply_fractional_power(reference, -r, project_l2(reference.mesh, reference.mass, F, order=order))
        return l2_norm(fine - transfer(coarse, reference.mesh), reference.mass)
    return l2_error(coarse, reference, order=order)
