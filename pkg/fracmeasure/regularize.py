"""L² regularizations μ_ε of point and curve measures."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import special

from .errors import SupportTooCloseToBoundary
from .fem import Density, Measure, PointDirac, WeightedCircle, density_load, integrate, measure_load
from .mesh import Mesh
from .schemas import RegularizationRow, RegularizationTable
from .spectral import EigenDecomposition, FracParams, dual_load_norm

logger = logging.getLogger(__name__)

# c with ∫_{R²} c·exp(−1/(1−|x|²)) dx = 1; the bump integral is π·E₂(1).
MOLLIFIER_CONSTANT = 1.0 / (math.pi * float(special.expn(2, 1.0)))
INDICATOR_LEVELS = 4
MOLLIFIER_LEVELS = 2
MOLLIFIER_ORDER = 5
MIN_ARC_POINTS = 256
_EVAL_CHUNK = 4096


class RegularizationKind(str, Enum):
    MOLLIFIER = "mollifier"
    DISK = "disk"
    RING = "ring"


@dataclass(frozen=True)
class RegularizedMeasure:
    """A density μ_ε standing in for ``base`` at scale ``epsilon``.

    ``support`` tells whether points lie in the closed ε-neighbourhood of
    supp μ; ``refine`` marks triangles that need subdivision quadrature.
    """

    base: Measure
    epsilon: float
    density: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kind: RegularizationKind
    support: Callable[[np.ndarray, np.ndarray], np.ndarray]
    refine: Callable[[np.ndarray], np.ndarray]
    order: int = 2
    levels: int = INDICATOR_LEVELS

    def to_density(self) -> Density:
        return Density(self.density, order=self.order, refine=self.refine, levels=self.levels)

    def load(self, m: Mesh) -> np.ndarray:
        return density_load(m, self.to_density())

    def mass(self, m: Mesh) -> float:
        return integrate(m, self.density, order=self.order, refine=self.refine, levels=self.levels)

    def l2_norm(self, m: Mesh) -> float:
        square = lambda x, y: self.density(x, y) ** 2  # noqa: E731
        return math.sqrt(integrate(m, square, order=self.order, refine=self.refine, levels=self.levels))


def bump(r2: np.ndarray) -> np.ndarray:
    """Normalized bump c·exp(−1/(1−|x|²)) evaluated from |x|²."""

    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = MOLLIFIER_CONSTANT * np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def _distance_to_square(point: Sequence[float]) -> float:
    x, y = float(point[0]), float(point[1])
    return min(x, 1.0 - x, y, 1.0 - y)


def _room(point: Sequence[float], mesh: Mesh | None) -> float:
    """Distance from ``point`` to the boundary; the unit square when no mesh is given."""

    if mesh is None:
        return _distance_to_square(point)
    return mesh.distance_to_boundary(point)


def _point_triangle_distance(corners: np.ndarray, z: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Min and max distance from z to each triangle (nt, 3, 2)."""

    z = np.asarray(z, dtype=float)
    rel = corners - z
    far = np.sqrt(np.max(np.sum(rel * rel, axis=2), axis=1))
    near = np.full(corners.shape[0], np.inf)
    for i in range(3):
        a, b = rel[:, i], rel[:, (i + 1) % 3]
        edge = b - a
        t = np.clip(-np.sum(a * edge, axis=1) / np.maximum(np.sum(edge * edge, axis=1), 1e-300), 0.0, 1.0)
        closest = a + t[:, np.newaxis] * edge
        near = np.minimum(near, np.sqrt(np.sum(closest * closest, axis=1)))
    # z inside the triangle: all edge cross products share the orientation sign
    cross = np.stack(
        [rel[:, i, 0] * rel[:, (i + 1) % 3, 1] - rel[:, i, 1] * rel[:, (i + 1) % 3, 0] for i in range(3)],
        axis=1,
    )
    near[np.all(cross >= 0.0, axis=1)] = 0.0
    return near, far


def _annulus_cut(z: Sequence[float], inner: float, outer: float) -> Callable[[np.ndarray], np.ndarray]:
    """Triangles meeting the annulus inner ≤ |x − z| ≤ outer without lying inside it."""

    def refine(corners: np.ndarray) -> np.ndarray:
        near, far = _point_triangle_distance(corners, z)
        meets = (near <= outer) & (far >= inner)
        contained = (near >= inner) & (far <= outer)
        return meets & ~contained

    return refine


def _near_set(z: Sequence[float], inner: float, outer: float) -> Callable[[np.ndarray], np.ndarray]:
    """Triangles meeting the annulus inner ≤ |x − z| ≤ outer."""

    def refine(corners: np.ndarray) -> np.ndarray:
        near, far = _point_triangle_distance(corners, z)
        return (near <= outer) & (far >= inner)

    return refine


def disk_indicator(
    z: Sequence[float], eps: float, *, weight: float = 1.0, mesh: Mesh | None = None
) -> RegularizedMeasure:
    """weight/(π ε²) on the disk B(z, ε)."""

    if eps <= 0.0:
        raise ValueError("eps must be positive")
    z = (float(z[0]), float(z[1]))
    if _room(z, mesh) <= eps:
        raise SupportTooCloseToBoundary(f"disk of radius {eps:g} at {z} leaves the domain")
    height = weight / (math.pi * eps * eps)
    cx, cy = z

    def support(x, y):
        return (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 <= eps * eps

    def density(x, y):
        return np.where((np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 < eps * eps, height, 0.0)

    return RegularizedMeasure(
        base=PointDirac(z, weight),
        epsilon=eps,
        density=density,
        kind=RegularizationKind.DISK,
        support=support,
        refine=_annulus_cut(z, 0.0, eps),
    )


def ring_indicator(
    center: Sequence[float], r: float, eps: float, *, total: float = 1.0, mesh: Mesh | None = None
) -> RegularizedMeasure:
    """total/(4π ε r) on the annulus r − ε < |x − center| < r + ε."""

    if eps <= 0.0 or eps >= r:
        raise ValueError("eps must lie in (0, r)")
    center = (float(center[0]), float(center[1]))
    if _room(center, mesh) <= r + eps:
        raise SupportTooCloseToBoundary(f"annulus of outer radius {r + eps:g} leaves the domain")
    height = total / (4.0 * math.pi * eps * r)
    cx, cy = center

    def distance(x, y):
        return np.hypot(np.asarray(x) - cx, np.asarray(y) - cy)

    def support(x, y):
        return np.abs(distance(x, y) - r) <= eps

    def density(x, y):
        return np.where(np.abs(distance(x, y) - r) < eps, height, 0.0)

    return RegularizedMeasure(
        base=WeightedCircle.normalized(center, r, total),
        epsilon=eps,
        density=density,
        kind=RegularizationKind.RING,
        support=support,
        refine=_annulus_cut(center, r - eps, r + eps),
    )


def _mollified_circle(circle: WeightedCircle, eps: float):
    r = circle.radius
    cx, cy = circle.center
    count = max(MIN_ARC_POINTS, math.ceil(8.0 * 2.0 * math.pi * r / eps))
    step = 2.0 * math.pi / count
    angles = step * np.arange(count)
    arc = np.column_stack([cx + r * np.cos(angles), cy + r * np.sin(angles)])
    arc_weight = circle.weight * 2.0 * math.pi * r / count
    half = min((count - 1) // 2, math.ceil(0.5 * math.pi * eps / (r * step)) + 1)
    offsets = np.arange(-half, half + 1)
    scale = 1.0 / (eps * eps)

    def density(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        flat_x, flat_y = x.ravel(), y.ravel()
        out = np.zeros(flat_x.size)
        for start in range(0, flat_x.size, _EVAL_CHUNK):
            px = flat_x[start : start + _EVAL_CHUNK]
            py = flat_y[start : start + _EVAL_CHUNK]
            nearest = np.rint(np.arctan2(py - cy, px - cx) / step).astype(np.int64)
            window = (nearest[:, np.newaxis] + offsets) % count
            dx = px[:, np.newaxis] - arc[window, 0]
            dy = py[:, np.newaxis] - arc[window, 1]
            out[start : start + _EVAL_CHUNK] = arc_weight * scale * bump((dx * dx + dy * dy) / (eps * eps)).sum(axis=1)
        return out.reshape(x.shape)

    return density


def mollify(mu: Measure, eps: float, mesh: Mesh | None = None) -> RegularizedMeasure:
    """μ ⋆ ρ_ε with ρ_ε(x) = ε^{-2} ρ(x/ε) and ρ the normalized bump.

    Circles are convolved through an arc quadrature of at least 256 points.
    """

    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if isinstance(mu, PointDirac):
        z = mu.location
        if _room(z, mesh) <= eps:
            raise SupportTooCloseToBoundary(f"mollifier support at {z} reaches the boundary")
        zx, zy = float(z[0]), float(z[1])
        weight = mu.weight

        def density(x, y):
            r2 = ((np.asarray(x) - zx) ** 2 + (np.asarray(y) - zy) ** 2) / (eps * eps)
            return weight * bump(r2) / (eps * eps)

        def support(x, y):
            return (np.asarray(x) - zx) ** 2 + (np.asarray(y) - zy) ** 2 <= eps * eps

        refine = _near_set(z, 0.0, eps)
    elif isinstance(mu, WeightedCircle):
        if _room(mu.center, mesh) <= mu.radius + eps:
            raise SupportTooCloseToBoundary(f"mollified circle of radius {mu.radius:g} reaches the boundary")
        if eps >= mu.radius:
            raise ValueError("eps must be smaller than the circle radius")
        density = _mollified_circle(mu, eps)
        cx, cy = mu.center
        radius = mu.radius

        def support(x, y):
            return np.abs(np.hypot(np.asarray(x) - cx, np.asarray(y) - cy) - radius) <= eps

        refine = _near_set(mu.center, radius - eps, radius + eps)
    else:
        raise TypeError(f"cannot mollify {type(mu).__name__}")
    return RegularizedMeasure(
        base=mu,
        epsilon=eps,
        density=density,
        kind=RegularizationKind.MOLLIFIER,
        support=support,
        refine=refine,
        order=MOLLIFIER_ORDER,
        levels=MOLLIFIER_LEVELS,
    )


def regularize(mu: Measure, kind: RegularizationKind | str, eps: float, mesh: Mesh | None = None) -> RegularizedMeasure:
    """Dispatch to the regularization ``kind`` appropriate for ``mu``."""

    kind = RegularizationKind(kind)
    if kind is RegularizationKind.MOLLIFIER:
        return mollify(mu, eps, mesh)
    if kind is RegularizationKind.DISK and isinstance(mu, PointDirac):
        return disk_indicator(mu.location, eps, weight=mu.weight, mesh=mesh)
    if kind is RegularizationKind.RING and isinstance(mu, WeightedCircle):
        return ring_indicator(mu.center, mu.radius, eps, total=mu.weight * 2.0 * math.pi * mu.radius, mesh=mesh)
    raise ValueError(f"{kind.value} regularization does not apply to {type(mu).__name__}")


def fitted_exponent(eps: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(eps)."""

    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.size < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(eps), np.log(values), 1)
    return float(slope)


def verify_regularization(
    E: EigenDecomposition,
    mu: Measure,
    eps_list: Sequence[float],
    p: FracParams,
    *,
    kind: RegularizationKind | str = RegularizationKind.MOLLIFIER,
) -> RegularizationTable:
    """Tabulate ‖μ − μ_ε‖_{H_h^{-s-θ}} and ‖μ_ε‖_{L²} over ``eps_list``."""

    m = E.mesh
    exact = measure_load(m, mu)
    rows: List[RegularizationRow] = []
    for eps in sorted(eps_list, reverse=True):
        reg = regularize(mu, kind, eps, m)
        load = reg.load(m)
        rows.append(
            RegularizationRow(
                epsilon=eps,
                negative_norm=dual_load_norm(E, p.test_order, exact - load),
                l2_norm=reg.l2_norm(m),
                mass=reg.mass(m),
            )
        )
        logger.info("regularization %s eps=%.4g: %s", RegularizationKind(kind).value, eps, rows[-1])
    eps = [row.epsilon for row in rows]
    return RegularizationTable(
        kind=RegularizationKind(kind).value,
        s=p.s,
        theta=p.theta,
        rows=rows,
        negative_norm_exponent=fitted_exponent(eps, [row.negative_norm for row in rows]),
        l2_exponent=fitted_exponent(eps, [row.l2_norm for row in rows]),
    )
