"""Pointwise-tracking optimal control with box constraints.

Minimizes J(u, q) = ½ Σ_z (u(z) − u_z)² + (α/2)‖q‖²_{L²} subject to the
fractional state equation and a ≤ q ≤ b, by the damped fixed point
q ← (1−ω) q + ω Π_[a,b](−p/α) on the optimality system.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Protocol, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, NoConvergence
from .fem import Density, FEFunction, PointDirac, check_measure, density_load, evaluate_many, l2_norm, measure_load
from .mesh import Mesh
from .numerics import SparseSymMatrix
from .quadrature import INNER_TOL, DiagonalizationRule, solve_practical
from .regularize import disk_indicator
from .spectral import EigenDecomposition, FracParams, solve_ideal

logger = logging.getLogger(__name__)

MIN_STEP = 1e-8
DAMPING_SAFETY = 0.9
_COST_SLACK = 64.0 * np.finfo(float).eps


@dataclass(frozen=True)
class ControlProblem:
    """Forcing, observation points with targets, cost weight α and box [a, b]."""

    points: Tuple[Tuple[float, float], ...]
    targets: Tuple[float, ...]
    alpha: float
    lower: float
    upper: float
    forcing: Density | None = None

    def __post_init__(self) -> None:
        points = tuple((float(x), float(y)) for x, y in self.points)
        targets = tuple(float(t) for t in self.targets)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "targets", targets)
        if not points:
            raise ValueError("at least one observation point is required")
        if len(points) != len(targets):
            raise ValueError(f"{len(points)} observation points but {len(targets)} targets")
        if not self.alpha > 0.0:
            raise ValueError("alpha must be positive")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError("lower bound must be smaller than upper bound")

    def check_on(self, m: Mesh) -> None:
        """Raise OutsideDomain unless every observation point is strictly interior."""

        for point in self.points:
            check_measure(m, PointDirac(point))


@dataclass
class OCPSolution:
    control: FEFunction
    state: FEFunction
    adjoint: FEFunction
    cost_history: List[float]
    iterations: int
    vi_residual: float
    omega: float
    lipschitz: float = field(default=float("nan"))

    @property
    def cost(self) -> float:
        return self.cost_history[-1]


class SolutionOperator(Protocol):
    """Discrete solution operator S: load vector → state coefficients."""

    mesh: Mesh
    mass: SparseSymMatrix

    def solve(self, load: np.ndarray) -> FEFunction: ...

    def point_load(self, point: Sequence[float], weight: float) -> np.ndarray: ...


@dataclass(frozen=True)
class IdealOperator:
    """S through the eigendecomposition; Dirac loads are paired exactly."""

    decomposition: EigenDecomposition
    s: float

    @property
    def mesh(self) -> Mesh:
        return self.decomposition.mesh

    @property
    def mass(self) -> SparseSymMatrix:
        return self.decomposition.mass

    def solve(self, load: np.ndarray) -> FEFunction:
        return solve_ideal(self.decomposition, self.s, load)

    def point_load(self, point: Sequence[float], weight: float) -> np.ndarray:
        return measure_load(self.mesh, PointDirac(tuple(point), weight))


@dataclass(frozen=True)
class PracticalOperator:
    """S through the diagonalization rule; Dirac loads are regularized by disks of radius ``epsilon``."""

    mesh: Mesh
    stiffness: SparseSymMatrix
    mass: SparseSymMatrix
    rule: DiagonalizationRule
    epsilon: float
    tol: float = INNER_TOL
    workers: int = 1

    def solve(self, load: np.ndarray) -> FEFunction:
        return solve_practical(
            self.stiffness, self.mass, self.rule, load, self.tol, mesh=self.mesh, workers=self.workers
        )

    def point_load(self, point: Sequence[float], weight: float) -> np.ndarray:
        return disk_indicator(point, self.epsilon, weight=weight, mesh=self.mesh).load(self.mesh)


def _operator(E: EigenDecomposition, p: FracParams, operator: SolutionOperator | None) -> SolutionOperator:
    return operator if operator is not None else IdealOperator(E, p.s)


def _forcing_load(m: Mesh, prob: ControlProblem | Density | None) -> np.ndarray:
    forcing = prob.forcing if isinstance(prob, ControlProblem) else prob
    if forcing is None:
        return np.zeros(m.num_interior)
    return density_load(m, forcing)


def solve_state(
    E: EigenDecomposition,
    p: FracParams,
    f: Density | None,
    q: FEFunction,
    *,
    operator: SolutionOperator | None = None,
    forcing_load: np.ndarray | None = None,
) -> FEFunction:
    """State u = S(f + q) with load ∫ f φ + M q."""

    S = _operator(E, p, operator)
    if q.mesh is not S.mesh:
        raise DimensionMismatch("control does not live on the state mesh")
    load = _forcing_load(S.mesh, f) if forcing_load is None else forcing_load
    return S.solve(load + S.mass @ q.coeffs)


def observations(u: FEFunction, prob: ControlProblem) -> np.ndarray:
    return evaluate_many(u, np.asarray(prob.points))


def adjoint_load(S: SolutionOperator, residuals: np.ndarray, prob: ControlProblem) -> np.ndarray:
    """Σ_z (u(z) − u_z) · ⟨δ_z, φ⟩."""

    load = np.zeros(S.mesh.num_interior)
    for point, weight in zip(prob.points, residuals):
        if weight != 0.0:
            load += S.point_load(point, float(weight))
    return load


def solve_adjoint(
    E: EigenDecomposition,
    p: FracParams,
    u: FEFunction,
    prob: ControlProblem,
    *,
    operator: SolutionOperator | None = None,
) -> FEFunction:
    """Adjoint p = S(Σ (u(z) − u_z) δ_z); S is self-adjoint."""

    S = _operator(E, p, operator)
    if u.mesh is not S.mesh:
        raise DimensionMismatch("state does not live on the decomposition's mesh")
    residuals = observations(u, prob) - np.asarray(prob.targets)
    return S.solve(adjoint_load(S, residuals, prob))


def project_admissible(v: FEFunction, a: float, b: float) -> FEFunction:
    """Π_[a,b](v) = min{b, max{a, v}} nodewise."""

    if not a < b:
        raise ValueError("lower bound must be smaller than upper bound")
    return FEFunction(v.mesh, np.clip(v.coeffs, a, b))


def evaluate_cost(u: FEFunction, q: FEFunction, prob: ControlProblem, M: SparseSymMatrix) -> float:
    """J(u, q) = ½ Σ (u(z) − u_z)² + (α/2)‖q‖²_{L²}."""

    residuals = observations(u, prob) - np.asarray(prob.targets)
    return 0.5 * float(residuals @ residuals) + 0.5 * prob.alpha * l2_norm(q, M) ** 2


def reduced_cost(
    E: EigenDecomposition,
    p: FracParams,
    prob: ControlProblem,
    q: FEFunction,
    *,
    operator: SolutionOperator | None = None,
) -> float:
    """j(q) = J(S(f + q), q)."""

    S = _operator(E, p, operator)
    u = solve_state(E, p, prob.forcing, q, operator=S)
    return evaluate_cost(u, q, prob, S.mass)


def reduced_gradient(
    E: EigenDecomposition,
    p: FracParams,
    prob: ControlProblem,
    q: FEFunction,
    *,
    operator: SolutionOperator | None = None,
) -> FEFunction:
    """L² Riesz representative p + α q of j'(q); j'(q)e = (p + αq)ᵀ M e."""

    S = _operator(E, p, operator)
    u = solve_state(E, p, prob.forcing, q, operator=S)
    adjoint = solve_adjoint(E, p, u, prob, operator=S)
    return FEFunction(q.mesh, adjoint.coeffs + prob.alpha * q.coeffs)


def observation_lipschitz(S: SolutionOperator, prob: ControlProblem) -> float:
    """‖q ↦ p(q)‖ in L²: the largest eigenvalue of the Gram matrix (S δ_i, S δ_j)_{L²}."""

    greens = np.column_stack([S.solve(S.point_load(point, 1.0)).coeffs for point in prob.points])
    gram = greens.T @ (S.mass @ greens)
    return float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[-1])


def solve_ocp(
    E: EigenDecomposition,
    p: FracParams,
    prob: ControlProblem,
    tol: float = 1e-10,
    maxit: int = 500,
    *,
    omega: float | None = None,
    operator: SolutionOperator | None = None,
    initial: FEFunction | None = None,
) -> OCPSolution:
    """Damped fixed-point iteration on q = Π_[a,b](−p/α).

    ω defaults to 0.9·α/(α + L) with L the exact Lipschitz constant of the
    control-to-adjoint map. A step that increases J is rejected and ω halved;
    the loop stops once ‖q − Π_[a,b](−p/α)‖_{L²} ≤ tol, which also bounds the
    last step ‖q_{m+1} − q_m‖_{L²} = ω·‖q − Π(−p/α)‖ by tol.
    """

    if tol <= 0.0:
        raise ValueError("tol must be positive")
    S = _operator(E, p, operator)
    m = S.mesh
    prob.check_on(m)
    M = S.mass
    forcing = _forcing_load(m, prob)

    lipschitz = observation_lipschitz(S, prob)
    if omega is None:
        omega = min(1.0, DAMPING_SAFETY * prob.alpha / (prob.alpha + lipschitz))
    if not 0.0 < omega <= 1.0:
        raise ValueError("omega must lie in (0, 1]")
    logger.info("OCP: alpha=%g L=%.6g omega=%.4g", prob.alpha, lipschitz, omega)

    def evaluate(q: FEFunction) -> Tuple[FEFunction, FEFunction, float]:
        u = solve_state(E, p, None, q, operator=S, forcing_load=forcing)
        return u, solve_adjoint(E, p, u, prob, operator=S), evaluate_cost(u, q, prob, M)

    q = project_admissible(initial if initial is not None else FEFunction(m, np.zeros(m.num_interior)), prob.lower, prob.upper)
    u, adjoint, cost = evaluate(q)
    history = [cost]

    for iteration in range(maxit + 1):
        target = project_admissible(FEFunction(m, -adjoint.coeffs / prob.alpha), prob.lower, prob.upper)
        vi_residual = l2_norm(target - q, M)
        if vi_residual <= tol:
            logger.info("OCP converged in %d iterations (J=%.10g, residual %.3e)", iteration, cost, vi_residual)
            return OCPSolution(q, u, adjoint, history, iteration, vi_residual, omega, lipschitz)
        if iteration == maxit:
            break
        while True:
            candidate = FEFunction(m, np.clip((1.0 - omega) * q.coeffs + omega * target.coeffs, prob.lower, prob.upper))
            u_next, adjoint_next, cost_next = evaluate(candidate)
            if cost_next <= cost + _COST_SLACK * max(abs(cost), 1.0):
                break
            omega *= 0.5
            logger.debug("OCP step rejected, omega -> %.3g", omega)
            if omega < MIN_STEP:
                raise NoConvergence(
                    "damping factor fell below 1e-8 without decreasing the cost",
                    iterations=iteration,
                    residual=vi_residual,
                    last_iterate=q,
                )
        q, u, adjoint, cost = candidate, u_next, adjoint_next, cost_next
        history.append(cost)
        logger.debug("OCP iteration %d: J=%.12g residual=%.3e", iteration + 1, cost, vi_residual)

    raise NoConvergence(
        f"OCP did not reach tolerance {tol:g} in {maxit} iterations",
        iterations=maxit,
        residual=vi_residual,
        last_iterate=q,
    )
