"""Convergence studies and scheme comparisons on structured unit-square meshes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .fem import (
    Density,
    FEFunction,
    Measure,
    PointDirac,
    WeightedCircle,
    assemble_mass,
    assemble_stiffness,
    l2_error,
    l2_norm,
    measure_load,
    transfer,
)
from .mesh import Mesh, build_structured_square, mesh_size
from .numerics import SparseSymMatrix
from .quadrature import INNER_TOL, DiagonalizationRule, build_rule, scalar_error, select_params, solve_practical
from .regularize import RegularizationKind, regularize
from .schemas import ConvergenceRow, ConvergenceTable, observed_order
from .spectral import (
    DEFAULT_MAX_DENSE_DIM,
    EigenDecomposition,
    FracParams,
    decompose,
    load_coefficients,
    solve_ideal,
)

logger = logging.getLogger(__name__)

Mode = Tuple[int, int, float]
NOISE_FACTOR = 1e3
REFERENCE_INFLATION = 4


def analytic_reference_square(s: float, modes: Sequence[Mode]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """u(x, y) = Σ c_mn (π²(m² + n²))^{-s} · 2 sin(mπx) sin(nπy)."""

    terms = [(m, n, c * (math.pi**2 * (m * m + n * n)) ** (-s)) for m, n, c in modes]

    def field(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for m, n, c in terms:
            out += c * 2.0 * np.sin(m * math.pi * x) * np.sin(n * math.pi * y)
        return out

    return field


def sine_modes(modes: Sequence[Mode]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Σ c·2 sin(mπx) sin(nπy): the s = 0 case of the analytic reference."""

    return analytic_reference_square(0.0, modes)


def prolong(u: FEFunction, fine: Mesh) -> FEFunction:
    """P1 interpolation of a coarse function onto a nested finer mesh."""

    return transfer(u, fine)


def observed_orders(h: Sequence[float], errors: Sequence[float], *, floor: float = 0.0) -> List[float | None]:
    """Orders from consecutive rows whose errors both exceed ``floor``."""

    orders: List[float | None] = [None]
    for i in range(1, len(errors)):
        if errors[i - 1] > floor and errors[i] > floor:
            orders.append(observed_order(errors[i - 1], errors[i], h[i - 1], h[i]))
        else:
            orders.append(None)
    return orders


def convergence_table(
    ns: Sequence[int],
    h: Sequence[float],
    errors: Sequence[float],
    *,
    floor: float,
    scheme: str,
    params: FracParams,
    measure: str,
) -> ConvergenceTable:
    orders = observed_orders(h, errors, floor=floor)
    rows = [ConvergenceRow(n=n, h_grid=hg, error=e, observed_order=o) for n, hg, e, o in zip(ns, h, errors, orders)]
    return ConvergenceTable(scheme=scheme, s=params.s, theta=params.theta, measure=measure, rows=rows)


def describe_measure(mu: Measure) -> str:
    if isinstance(mu, PointDirac):
        return f"dirac({mu.location[0]:g},{mu.location[1]:g})"
    if isinstance(mu, WeightedCircle):
        return f"circle(({mu.center[0]:g},{mu.center[1]:g}),r={mu.radius:g},w={mu.weight:.6g})"
    return "density"


@dataclass(frozen=True)
class SchemeConfig:
    """Everything needed to solve one measure problem on a structured mesh."""

    scheme: str
    params: FracParams
    measure: Measure
    regularization: RegularizationKind | None = None
    epsilon_factor: float = 1.0
    epsilon: float | None = None
    c: float = 2.0
    Y: float | None = None
    K: int | None = None
    inner_tol: float = INNER_TOL
    workers: int = 1
    max_dense_dim: int = DEFAULT_MAX_DENSE_DIM

    def __post_init__(self) -> None:
        if self.scheme not in ("ideal", "practical"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def default_regularization(self) -> RegularizationKind:
        if self.regularization is not None:
            return RegularizationKind(self.regularization)
        if isinstance(self.measure, PointDirac):
            return RegularizationKind.DISK
        if isinstance(self.measure, WeightedCircle):
            return RegularizationKind.RING
        return RegularizationKind.MOLLIFIER

    def rule_for(self, h_grid: float, *, inflation: int = 1) -> DiagonalizationRule:
        if self.Y is not None and self.K is not None:
            Y, K = self.Y, self.K
        else:
            Y, K = select_params(self.params.s, h_grid, self.c)
        return build_rule(self.params.s, Y, K * inflation)


@dataclass
class SchemeSolution:
    solution: FEFunction
    load: np.ndarray
    epsilon: float | None = None
    rule: DiagonalizationRule | None = None
    decomposition: EigenDecomposition | None = None
    stiffness: SparseSymMatrix | None = None
    mass: SparseSymMatrix | None = None


def scheme_load(config: SchemeConfig, m: Mesh) -> Tuple[np.ndarray, float | None]:
    """Load vector for ``config``; measure data is regularized for the practical scheme."""

    if config.scheme == "ideal" or isinstance(config.measure, Density):
        return measure_load(m, config.measure), None
    _, h_grid = mesh_size(m)
    eps = config.epsilon if config.epsilon is not None else config.epsilon_factor * h_grid
    reg = regularize(config.measure, config.default_regularization(), eps, m)
    return reg.load(m), eps


def solve_scheme(config: SchemeConfig, m: Mesh, *, inflation: int = 1) -> SchemeSolution:
    load, eps = scheme_load(config, m)
    if config.scheme == "ideal":
        E = decompose(m, max_dim=config.max_dense_dim)
        return SchemeSolution(
            solve_ideal(E, config.params, load), load, decomposition=E, stiffness=E.stiffness, mass=E.mass
        )
    _, h_grid = mesh_size(m)
    rule = config.rule_for(h_grid, inflation=inflation)
    K_mat, M_mat = assemble_stiffness(m), assemble_mass(m)
    u = solve_practical(K_mat, M_mat, rule, load, config.inner_tol, mesh=m, workers=config.workers)
    return SchemeSolution(u, load, epsilon=eps, rule=rule, stiffness=K_mat, mass=M_mat)


def self_convergence(config: SchemeConfig, n_list: Sequence[int], reference_n: int | None = None) -> ConvergenceTable:
    """L² errors of each level against a reference on the finest nested mesh.

    The reference is the ``reference_n`` solution (default: the last n); for
    the practical scheme its rule uses REFERENCE_INFLATION times as many terms.
    """

    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    reference_n = n_list[-1] if reference_n is None else reference_n
    if any(reference_n % n for n in n_list):
        raise ValueError("every n must divide reference_n so meshes are nested")

    fine = build_structured_square(reference_n)
    inflation = REFERENCE_INFLATION if config.scheme == "practical" else 1
    reference = solve_scheme(config, fine, inflation=inflation).solution
    M_fine = assemble_mass(fine)
    ref_norm = l2_norm(reference, M_fine)

    h, errors = [], []
    for n in n_list:
        if n == reference_n and inflation == 1:
            u = reference
        else:
            m = fine if n == reference_n else build_structured_square(n)
            u = solve_scheme(config, m).solution
            if m is not fine:
                u = prolong(u, fine)
        error = l2_norm(u - reference, M_fine)
        h.append(1.0 / n)
        errors.append(error)
        logger.info("self-convergence %s n=%d: error %.6e", config.scheme, n, error)

    floor = NOISE_FACTOR * np.finfo(float).eps * ref_norm
    return convergence_table(
        n_list, h, errors, floor=floor, scheme=config.scheme, params=config.params, measure=describe_measure(config.measure)
    )


def smooth_convergence(
    params: FracParams, modes: Sequence[Mode], n_list: Sequence[int], *, scheme: str = "ideal", c: float = 2.0
) -> ConvergenceTable:
    """Errors against the analytic unit-square solution for a sine-mode density."""

    exact = analytic_reference_square(params.s, modes)
    config = SchemeConfig(scheme=scheme, params=params, measure=Density(sine_modes(modes), order=5), c=c)
    h, errors = [], []
    for n in n_list:
        m = build_structured_square(n)
        u = solve_scheme(config, m).solution
        h.append(1.0 / n)
        errors.append(l2_error(u, exact))
    return convergence_table(
        list(n_list), h, errors, floor=NOISE_FACTOR * np.finfo(float).eps, scheme=scheme, params=params, measure="sine-modes"
    )


def discrepancy_bound(E: EigenDecomposition, rule: DiagonalizationRule, g: np.ndarray) -> float:
    """max_n scalar_error(Λ_n) · ‖ĝ‖₂, which bounds ‖u_ideal − u_practical‖_{L²} up to inner tolerance."""

    hat = load_coefficients(E, g)
    return float(np.max(scalar_error(rule, E.values)) * np.linalg.norm(hat))


def compare_schemes(
    E: EigenDecomposition,
    rule: DiagonalizationRule,
    measure: Measure | np.ndarray,
    p: FracParams,
    *,
    epsilon: float | None = None,
    kind: RegularizationKind | str | None = None,
    tol: float = INNER_TOL,
) -> float:
    """L² distance between the ideal and practical solutions for the same load.

    ``measure`` may be a load vector. Point and curve measures are regularized
    first (ε defaults to h_grid).
    """

    m = E.mesh
    if isinstance(measure, np.ndarray):
        g = measure
    elif isinstance(measure, Density):
        g = measure_load(m, measure)
    else:
        _, h_grid = mesh_size(m)
        config = SchemeConfig("practical", p, measure, regularization=kind)
        reg = regularize(measure, config.default_regularization(), epsilon or h_grid, m)
        g = reg.load(m)
    ideal = solve_ideal(E, p, g)
    practical = solve_practical(E.stiffness, E.mass, rule, g, tol, mesh=m)
    return l2_norm(ideal - practical, E.mass)
