"""P1 finite elements with homogeneous Dirichlet conditions.

Assembly follows the usual element-by-element pattern: element matrices are
computed for all triangles at once, scattered into COO triplets and summed by
``scipy.sparse`` (duplicate entries are added in triplet order, which is fixed
by the triangle numbering). Matrices on the finite element space are the
restriction of the full-vertex matrices to interior vertices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Sequence, Tuple, Union

import numpy as np
from scipy import sparse as sp

from .errors import DimensionMismatch, OutsideDomain
from .mesh import Mesh, locate_point, locate_points, mesh_size
from .numerics import SparseSymMatrix, conjugate_gradient

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
RefinePredicate = Callable[[np.ndarray], np.ndarray]

DEFAULT_DENSITY_ORDER = 2
DEFAULT_REFINE_LEVELS = 4
_REFINED_BATCH = 512

# Symmetric Gauss rules on the reference triangle: barycentric points, weights summing to 1.
_RULES: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}


def _orbit3(a: float) -> np.ndarray:
    b = 1.0 - 2.0 * a
    return np.array([[b, a, a], [a, b, a], [a, a, b]])


def _register_rules() -> None:
    _RULES[1] = (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0]))
    _RULES[2] = (_orbit3(1.0 / 6.0), np.full(3, 1.0 / 3.0))
    _RULES[4] = (
        np.vstack([_orbit3(0.445948490915965), _orbit3(0.091576213509771)]),
        np.concatenate([np.full(3, 0.223381589678011), np.full(3, 0.109951743655322)]),
    )
    _RULES[5] = (
        np.vstack([np.array([[1.0, 1.0, 1.0]]) / 3.0, _orbit3(0.470142064105115), _orbit3(0.101286507323456)]),
        np.concatenate([[0.225], np.full(3, 0.132394152788506), np.full(3, 0.125939180544827)]),
    )


_register_rules()


def triangle_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric points and weights exact for polynomials of degree ``order``."""

    for degree in sorted(_RULES):
        if degree >= order:
            return _RULES[degree]
    raise ValueError(f"no triangle rule of degree {order}; maximum is {max(_RULES)}")


@lru_cache(maxsize=None)
def subdivided_rule(order: int, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule on 4**levels congruent sub-triangles of the reference triangle."""

    points, weights = triangle_rule(order)
    cells = [np.eye(3)]
    for _ in range(levels):
        children = []
        for a, b, c in cells:
            ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
            children.extend([np.array(v) for v in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
        cells = children
    stacked = np.concatenate([points @ cell for cell in cells])
    return stacked, np.tile(weights, len(cells)) / len(cells)


@dataclass(frozen=True, eq=False)
class FEFunction:
    """Coefficient vector over the interior nodal basis of a mesh."""

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float, copy=True).ravel()
        if coeffs.size != self.mesh.num_interior:
            raise DimensionMismatch(f"{coeffs.size} coefficients for {self.mesh.num_interior} interior nodes")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def nodal_values(self) -> np.ndarray:
        """Values at every mesh vertex, zero on the boundary."""

        values = np.zeros(self.mesh.num_vertices)
        values[self.mesh.interior_nodes] = self.coeffs
        return values

    def _check_same_mesh(self, other: "FEFunction") -> None:
        if other.mesh is not self.mesh:
            raise DimensionMismatch("functions live on different meshes")

    def __add__(self, other: "FEFunction") -> "FEFunction":
        self._check_same_mesh(other)
        return FEFunction(self.mesh, self.coeffs + other.coeffs)

    def __sub__(self, other: "FEFunction") -> "FEFunction":
        self._check_same_mesh(other)
        return FEFunction(self.mesh, self.coeffs - other.coeffs)

    def __mul__(self, factor: float) -> "FEFunction":
        return FEFunction(self.mesh, factor * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "FEFunction":
        return FEFunction(self.mesh, -self.coeffs)


def zero_function(m: Mesh) -> FEFunction:
    return FEFunction(m, np.zeros(m.num_interior))


@dataclass(frozen=True)
class PointDirac:
    """weight · δ_z."""

    location: Tuple[float, float]
    weight: float = 1.0

    def total_variation(self) -> float:
        return abs(self.weight)


@dataclass(frozen=True)
class WeightedCircle:
    """weight · δ_Γ for the circle Γ of given center and radius; ``weight`` is per unit arc length."""

    center: Tuple[float, float]
    radius: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    @classmethod
    def normalized(cls, center: Tuple[float, float], radius: float, total: float = 1.0) -> "WeightedCircle":
        """Circle measure with total mass ``total``."""

        return cls(center=center, radius=radius, weight=total / (2.0 * math.pi * radius))

    def total_variation(self) -> float:
        return abs(self.weight) * 2.0 * math.pi * self.radius


@dataclass(frozen=True)
class Density:
    """Absolutely continuous measure f·dx.

    ``field`` takes coordinate arrays and returns values of the same shape.
    Triangles selected by ``refine`` are integrated with a composite rule on
    4**levels sub-triangles; it marks elements crossed by a discontinuity.
    """

    field: ScalarField
    order: int = DEFAULT_DENSITY_ORDER
    refine: RefinePredicate | None = None
    levels: int = DEFAULT_REFINE_LEVELS

    def total_variation(self, m: Mesh) -> float:
        return integrate(m, lambda x, y: np.abs(self.field(x, y)), order=self.order, refine=self.refine, levels=self.levels)


Measure = Union[PointDirac, WeightedCircle, Density]


def _restrict_matrix(m: Mesh, full: sp.spmatrix) -> SparseSymMatrix:
    interior = m.interior_nodes
    return sp.csr_matrix(full.tocsr()[interior][:, interior])


def _scatter(m: Mesh, local: np.ndarray) -> sp.csr_matrix:
    tris = m.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = m.num_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def element_gradients(m: Mesh) -> np.ndarray:
    """Gradients of the three barycentric functions per triangle, shape (nt, 3, 2)."""

    p = m.corners
    area2 = 2.0 * m.signed_areas
    grads = np.empty((m.num_triangles, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / area2
        grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / area2
    return grads


def assemble_full_stiffness(m: Mesh) -> sp.csr_matrix:
    """Stiffness matrix over all vertices (no boundary condition applied)."""

    grads = element_gradients(m)
    local = m.signed_areas[:, np.newaxis, np.newaxis] * np.einsum("tid,tjd->tij", grads, grads)
    return _scatter(m, local)


def assemble_full_mass(m: Mesh) -> sp.csr_matrix:
    """Consistent mass matrix over all vertices."""

    reference = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = m.signed_areas[:, np.newaxis, np.newaxis] * reference[np.newaxis]
    return _scatter(m, local)


def assemble_stiffness(m: Mesh) -> SparseSymMatrix:
    """K_ij = ∫ ∇φ_i·∇φ_j over interior basis functions."""

    K = _restrict_matrix(m, assemble_full_stiffness(m))
    logger.info("assembled stiffness: N_h=%d, nnz=%d", K.shape[0], K.nnz)
    return K


def assemble_mass(m: Mesh) -> SparseSymMatrix:
    """M_ij = ∫ φ_i φ_j over interior basis functions."""

    return _restrict_matrix(m, assemble_full_mass(m))


def restrict(m: Mesh, full: np.ndarray) -> np.ndarray:
    """Keep the entries of a vertex vector that belong to interior vertices."""

    return np.asarray(full)[m.interior_nodes]


def evaluate_many(u: FEFunction, points: np.ndarray) -> np.ndarray:
    """Evaluate ``u`` at an array of points."""

    triangles, bary = locate_points(u.mesh, points)
    nodal = u.nodal_values()
    return np.einsum("pk,pk->p", bary, nodal[u.mesh.triangles[triangles]])


def evaluate(u: FEFunction, x: Sequence[float]) -> float:
    """Point value u(x) by barycentric interpolation."""

    triangle, bary = locate_point(u.mesh, x)
    nodal = u.nodal_values()
    return float(bary @ nodal[u.mesh.triangles[triangle]])


def interpolate(m: Mesh, f: ScalarField) -> FEFunction:
    """Nodal interpolant of f (values at interior vertices)."""

    xy = m.vertices[m.interior_nodes]
    return FEFunction(m, np.asarray(f(xy[:, 0], xy[:, 1]), dtype=float))


def _quadrature_batches(m: Mesh, order: int, refine: RefinePredicate | None, levels: int):
    """Yield (triangle indices, barycentric points, weights) blocks covering the mesh."""

    if refine is None:
        cut = np.zeros(m.num_triangles, dtype=bool)
    else:
        cut = np.asarray(refine(m.corners), dtype=bool)
    plain = np.flatnonzero(~cut)
    if plain.size:
        points, weights = triangle_rule(order)
        yield plain, points, weights
    refined = np.flatnonzero(cut)
    if refined.size:
        points, weights = subdivided_rule(order, levels)
        for start in range(0, refined.size, _REFINED_BATCH):
            yield refined[start : start + _REFINED_BATCH], points, weights


def _field_at(m: Mesh, f: ScalarField, tris: np.ndarray, points: np.ndarray) -> np.ndarray:
    xy = np.einsum("qk,tkd->tqd", points, m.corners[tris])
    return np.asarray(f(xy[..., 0], xy[..., 1]), dtype=float)


def integrate(
    m: Mesh,
    f: ScalarField,
    *,
    order: int = 5,
    refine: RefinePredicate | None = None,
    levels: int = DEFAULT_REFINE_LEVELS,
) -> float:
    """∫_Ω f dx by elementwise Gauss quadrature."""

    total = 0.0
    for tris, points, weights in _quadrature_batches(m, order, refine, levels):
        values = _field_at(m, f, tris, points)
        total += float(m.signed_areas[tris] @ (values @ weights))
    return total


def density_load(m: Mesh, density: Density, *, full: bool = False) -> np.ndarray:
    """g_m = ∫ f φ_m dx."""

    load = np.zeros(m.num_vertices)
    for tris, points, weights in _quadrature_batches(m, density.order, density.refine, density.levels):
        values = _field_at(m, density.field, tris, points)
        local = m.signed_areas[tris, np.newaxis] * ((values * weights) @ points)
        np.add.at(load, m.triangles[tris], local)
    return load if full else restrict(m, load)


ARC_POINTS = 6
_ANGLE_TOL = 1e-14


def _edge_crossings(m: Mesh, circle: WeightedCircle) -> np.ndarray:
    """Sorted angles in [0, 2π) where the circle crosses a mesh edge."""

    unique, _ = m.edges
    start = m.vertices[unique[:, 0]] - np.asarray(circle.center)
    step = m.vertices[unique[:, 1]] - m.vertices[unique[:, 0]]
    a = np.einsum("ij,ij->i", step, step)
    b = 2.0 * np.einsum("ij,ij->i", start, step)
    c = np.einsum("ij,ij->i", start, start) - circle.radius**2
    disc = b * b - 4.0 * a * c
    hit = disc >= 0.0
    root = np.sqrt(disc[hit])
    t = np.concatenate([(-b[hit] - root) / (2.0 * a[hit]), (-b[hit] + root) / (2.0 * a[hit])])
    base = np.concatenate([start[hit], start[hit]])
    direction = np.concatenate([step[hit], step[hit]])
    keep = (t >= 0.0) & (t <= 1.0)
    xy = base[keep] + t[keep, np.newaxis] * direction[keep]
    angles = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), 2.0 * math.pi)
    angles = np.sort(angles)
    if angles.size:
        angles = angles[np.concatenate([[True], np.diff(angles) > _ANGLE_TOL])]
    return angles


def circle_points(m: Mesh, circle: WeightedCircle, *, arc_points: int = ARC_POINTS) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and arc-length weights for ``circle``.

    The circle is cut where it crosses mesh edges, so every arc lies inside one
    triangle and the integrand is smooth on it.
    """

    if arc_points < 1:
        raise ValueError("arc_points must be positive")
    cuts = _edge_crossings(m, circle)
    if cuts.size == 0:
        cuts = np.array([0.0])
    lower = cuts
    upper = np.append(cuts[1:], cuts[0] + 2.0 * math.pi)
    nodes, gauss = np.polynomial.legendre.leggauss(arc_points)
    half = 0.5 * (upper - lower)
    angles = (0.5 * (upper + lower))[:, np.newaxis] + half[:, np.newaxis] * nodes
    weights = circle.weight * circle.radius * half[:, np.newaxis] * gauss
    cx, cy = circle.center
    angles = angles.ravel()
    points = np.column_stack([cx + circle.radius * np.cos(angles), cy + circle.radius * np.sin(angles)])
    return points, weights.ravel()


def check_measure(m: Mesh, mu: Measure) -> None:
    """Raise OutsideDomain unless the measure is supported strictly inside the domain."""

    if isinstance(mu, PointDirac):
        locate_point(m, mu.location)
        if m.distance_to_boundary(mu.location) <= 0.0:
            raise OutsideDomain(mu.location, "Dirac location lies on the boundary")
    elif isinstance(mu, WeightedCircle):
        locate_point(m, mu.center)
        if m.distance_to_boundary(mu.center) <= mu.radius:
            raise OutsideDomain(mu.center, f"circle of radius {mu.radius:g} leaves the domain")


def measure_load(m: Mesh, mu: Measure, *, full: bool = False, arc_points: int = ARC_POINTS) -> np.ndarray:
    """g_m = ⟨μ, φ_m⟩ for each interior node (all vertices if ``full``).

    ``arc_points`` is the Gauss rule size on each arc of a circle between edge crossings.
    """

    if isinstance(mu, Density):
        return density_load(m, mu, full=full)
    check_measure(m, mu)
    if isinstance(mu, PointDirac):
        points = np.asarray(mu.location, dtype=float)[np.newaxis, :]
        weights = np.array([mu.weight])
    elif isinstance(mu, WeightedCircle):
        points, weights = circle_points(m, mu, arc_points=arc_points)
    else:
        raise TypeError(f"unsupported measure {type(mu).__name__}")
    triangles, bary = locate_points(m, points)
    load = np.zeros(m.num_vertices)
    np.add.at(load, m.triangles[triangles], bary * weights[:, np.newaxis])
    return load if full else restrict(m, load)


def _check_matrix(u: FEFunction, A) -> None:
    if A.shape != (u.coeffs.size, u.coeffs.size):
        raise DimensionMismatch(f"matrix {A.shape} does not match {u.coeffs.size} coefficients")


def l2_norm(u: FEFunction, M: SparseSymMatrix) -> float:
    """sqrt(cᵀ M c)."""

    _check_matrix(u, M)
    return math.sqrt(max(float(u.coeffs @ (M @ u.coeffs)), 0.0))


def h1_seminorm(u: FEFunction, K: SparseSymMatrix) -> float:
    """sqrt(cᵀ K c)."""

    _check_matrix(u, K)
    return math.sqrt(max(float(u.coeffs @ (K @ u.coeffs)), 0.0))


def project_l2(m: Mesh, M: SparseSymMatrix, f: ScalarField, *, order: int = 5, tol: float = 1e-12) -> FEFunction:
    """L² projection P_h f onto the finite element space."""

    load = density_load(m, Density(f, order=order))
    return FEFunction(m, conjugate_gradient(M, load, tol=tol))


def l2_error(u: FEFunction, exact: ScalarField, *, order: int = 5) -> float:
    """‖exact − u‖_{L²} by elementwise quadrature."""

    m = u.mesh
    points, weights = triangle_rule(order)
    nodal = u.nodal_values()[m.triangles]
    xy = np.einsum("qk,tkd->tqd", points, m.corners)
    diff = np.asarray(exact(xy[..., 0], xy[..., 1]), dtype=float) - nodal @ points.T
    return math.sqrt(float(m.signed_areas @ ((diff * diff) @ weights)))


def transfer(u: FEFunction, target: Mesh) -> FEFunction:
    """Nodal interpolant on ``target`` of the piecewise linear function ``u``."""

    points = target.vertices[target.interior_nodes]
    if points.shape[0] == 0:
        return zero_function(target)
    return FEFunction(target, evaluate_many(u, points))
