"""Conforming triangulations of polygonal domains."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import InvalidTopology, OutsideDomain, ParseError

logger = logging.getLogger(__name__)

BARYCENTRIC_TOL = 1e-12
_LOCATE_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with per-vertex boundary flags.

    Triangles are counterclockwise vertex-index triples. Interior (non-boundary)
    vertices are numbered densely 0..N_h-1 in vertex order; ``interior_index``
    holds -1 for boundary vertices.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    structured_n: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", np.array(self.vertices, dtype=float, copy=True))
        object.__setattr__(self, "triangles", np.array(self.triangles, dtype=np.int64, copy=True))
        object.__setattr__(self, "boundary", np.array(self.boundary, dtype=bool, copy=True))
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)
        self.boundary.setflags(write=False)
        _check_invariants(self)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_interior(self) -> int:
        return int(self.interior_nodes.size)

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def interior_index(self) -> np.ndarray:
        index = np.full(self.num_vertices, -1, dtype=np.int64)
        index[self.interior_nodes] = np.arange(self.interior_nodes.size)
        return index

    @cached_property
    def corners(self) -> np.ndarray:
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""

        return self.vertices[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.corners
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return self.signed_areas

    @cached_property
    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unique sorted edges and the number of triangles sharing each."""

        local = np.concatenate(
            [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]]
        )
        local.sort(axis=1)
        unique, counts = np.unique(local, axis=0, return_counts=True)
        return unique, counts

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        unique, counts = self.edges
        return unique[counts == 1]

    @cached_property
    def _inverse_maps(self) -> np.ndarray:
        p = self.corners
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return np.linalg.inv(jac)

    def barycentric(self, triangle: int | np.ndarray, point: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of ``point`` with respect to ``triangle``."""

        triangle = np.atleast_1d(triangle)
        point = np.atleast_2d(np.asarray(point, dtype=float))
        local = np.einsum("tij,tj->ti", self._inverse_maps[triangle], point - self.corners[triangle, 0])
        bary = np.column_stack([1.0 - local[:, 0] - local[:, 1], local[:, 0], local[:, 1]])
        return bary

    def distance_to_boundary(self, point: Sequence[float]) -> float:
        """Euclidean distance from ``point`` to the nearest boundary edge."""

        x = np.asarray(point, dtype=float)
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", x - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        nearest = a + t[:, np.newaxis] * ab
        return float(np.sqrt(((nearest - x) ** 2).sum(axis=1)).min())


def _check_invariants(mesh: Mesh) -> None:
    verts, tris, flags = mesh.vertices, mesh.triangles, mesh.boundary
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise InvalidTopology(f"vertices must have shape (nv, 2), got {verts.shape}")
    if tris.ndim != 2 or tris.shape[1] != 3 or tris.shape[0] == 0:
        raise InvalidTopology(f"triangles must have shape (nt, 3), got {tris.shape}")
    if flags.shape != (verts.shape[0],):
        raise InvalidTopology("one boundary flag per vertex is required")
    if tris.min() < 0 or tris.max() >= verts.shape[0]:
        bad = int(np.flatnonzero((tris < 0).any(axis=1) | (tris >= verts.shape[0]).any(axis=1))[0])
        raise InvalidTopology("vertex index out of range", triangle=bad)

    non_positive = np.flatnonzero(mesh.signed_areas <= 0.0)
    if non_positive.size:
        raise InvalidTopology("clockwise or degenerate triangle", triangle=int(non_positive[0]))

    unique, counts = mesh.edges
    if np.any(counts > 2):
        edge = unique[np.argmax(counts > 2)]
        owner = _triangle_with_edge(tris, edge)
        raise InvalidTopology(f"edge {tuple(int(v) for v in edge)} shared by more than two triangles", triangle=owner)

    used = np.zeros(verts.shape[0], dtype=bool)
    used[tris.ravel()] = True
    if not used.all():
        raise InvalidTopology(f"vertex {int(np.flatnonzero(~used)[0])} belongs to no triangle")

    on_boundary = np.zeros(verts.shape[0], dtype=bool)
    on_boundary[unique[counts == 1].ravel()] = True
    mismatch = np.flatnonzero(on_boundary != flags)
    if mismatch.size:
        vertex = int(mismatch[0])
        owner = int(np.flatnonzero((tris == vertex).any(axis=1))[0])
        state = "lies on" if on_boundary[vertex] else "is not on"
        raise InvalidTopology(
            f"vertex {vertex} {state} the topological boundary but is flagged {int(flags[vertex])}",
            triangle=owner,
        )


def _triangle_with_edge(tris: np.ndarray, edge: np.ndarray) -> int:
    has_both = (tris == edge[0]).any(axis=1) & (tris == edge[1]).any(axis=1)
    return int(np.flatnonzero(has_both)[0])


def build_structured_square(n: int) -> Mesh:
    """Uniform triangulation of the unit square with n cells per side.

    Every cell is split along its lower-left to upper-right diagonal; cells
    are numbered row by row and contribute two consecutive triangles.
    """

    if n < 1:
        raise ValueError("n must be at least 1")
    coords = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    gi = np.tile(np.arange(n + 1), n + 1)
    gj = np.repeat(np.arange(n + 1), n + 1)
    boundary = (gi == 0) | (gi == n) | (gj == 0) | (gj == n)
    return Mesh(vertices=vertices, triangles=triangles, boundary=boundary, structured_n=n)


def _data_lines(lines: List[str]) -> Iterator[Tuple[int, List[str]]]:
    for number, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if tokens:
            yield number, tokens


def load_mesh(path: str | Path) -> Mesh:
    """Read and validate a mesh in the ASCII ``nv nt`` / ``x y flag`` / ``i j k`` format."""

    lines = Path(path).read_text().splitlines()
    records = _data_lines(lines)
    last_line = len(lines) + 1

    def take(expected: int, what: str) -> Tuple[int, List[str]]:
        try:
            number, tokens = next(records)
        except StopIteration:
            raise ParseError(f"unexpected end of file, expected {what}", last_line) from None
        if len(tokens) != expected:
            raise ParseError(f"expected {expected} fields for {what}, got {len(tokens)}", number)
        return number, tokens

    number, header = take(2, "header 'nv nt'")
    try:
        nv, nt = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError("header must hold two integers", number) from None
    if nv < 3 or nt < 1:
        raise ParseError("mesh needs at least 3 vertices and 1 triangle", number)

    vertices = np.empty((nv, 2))
    boundary = np.empty(nv, dtype=bool)
    for k in range(nv):
        number, tokens = take(3, "vertex 'x y flag'")
        try:
            vertices[k] = float(tokens[0]), float(tokens[1])
            flag = int(tokens[2])
        except ValueError:
            raise ParseError("vertex line must be 'x y flag'", number) from None
        if flag not in (0, 1):
            raise ParseError(f"boundary flag must be 0 or 1, got {flag}", number)
        boundary[k] = bool(flag)

    triangles = np.empty((nt, 3), dtype=np.int64)
    for k in range(nt):
        number, tokens = take(3, "triangle 'i j k'")
        try:
            triangles[k] = [int(t) for t in tokens]
        except ValueError:
            raise ParseError("triangle line must hold three integers", number) from None
        if triangles[k].min() < 0 or triangles[k].max() >= nv:
            raise ParseError(f"vertex index out of range 0..{nv - 1}", number)

    trailing = next(records, None)
    if trailing is not None:
        raise ParseError("unexpected content after the last triangle", trailing[0])

    mesh = Mesh(vertices=vertices, triangles=triangles, boundary=boundary)
    logger.info("loaded mesh %s: %d vertices, %d triangles", path, nv, nt)
    return mesh


def save_mesh(mesh: Mesh, path: str | Path) -> Path:
    """Write ``mesh`` in the format read by :func:`load_mesh`."""

    target = Path(path)
    rows = [f"{mesh.num_vertices} {mesh.num_triangles}"]
    rows.extend(
        f"{x:.17g} {y:.17g} {int(flag)}" for (x, y), flag in zip(mesh.vertices, mesh.boundary)
    )
    rows.extend(f"{i} {j} {k}" for i, j, k in mesh.triangles)
    target.write_text("\n".join(rows) + "\n")
    return target


def mesh_size(m: Mesh) -> Tuple[float, float]:
    """Return (max element diameter, min edge length)."""

    unique, _ = m.edges
    lengths = np.linalg.norm(m.vertices[unique[:, 1]] - m.vertices[unique[:, 0]], axis=1)
    p = m.corners
    diameters = np.max(
        np.stack(
            [
                np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
                np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
                np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            ],
            axis=1,
        ),
        axis=1,
    )
    return float(diameters.max()), float(lengths.min())


def _structured_candidates(m: Mesh, points: np.ndarray) -> np.ndarray:
    n = m.structured_n
    cols = []
    for di in (-1, 0):
        for dj in (-1, 0):
            ci = np.clip(np.floor(points[:, 0] * n).astype(np.int64) + di, 0, n - 1)
            cj = np.clip(np.floor(points[:, 1] * n).astype(np.int64) + dj, 0, n - 1)
            cell = cj * n + ci
            cols.extend([2 * cell, 2 * cell + 1])
    return np.sort(np.column_stack(cols), axis=1)


def locate_points(m: Mesh, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`locate_point`; returns triangle indices and (npts, 3) coordinates."""

    points = np.atleast_2d(np.asarray(points, dtype=float))
    npts = points.shape[0]
    found = np.full(npts, -1, dtype=np.int64)
    bary = np.zeros((npts, 3))

    if m.structured_n is not None:
        candidates = _structured_candidates(m, points)
        for col in range(candidates.shape[1]):
            pending = found < 0
            if not pending.any():
                break
            tri = candidates[pending, col]
            coords = m.barycentric(tri, points[pending])
            inside = (coords >= -BARYCENTRIC_TOL).all(axis=1)
            idx = np.flatnonzero(pending)[inside]
            found[idx] = tri[inside]
            bary[idx] = coords[inside]
    else:
        inv = m._inverse_maps
        origin = m.corners[:, 0]
        chunk_size = max(1, _LOCATE_BUDGET // m.num_triangles)
        for start in range(0, npts, chunk_size):
            chunk = points[start : start + chunk_size]
            local = np.einsum("tij,ptj->pti", inv, chunk[:, np.newaxis, :] - origin[np.newaxis])
            lam0 = 1.0 - local[..., 0] - local[..., 1]
            inside = (lam0 >= -BARYCENTRIC_TOL) & (local >= -BARYCENTRIC_TOL).all(axis=2)
            has = inside.any(axis=1)
            first = np.argmax(inside, axis=1)
            rows = np.flatnonzero(has)
            found[start + rows] = first[rows]
            bary[start + rows] = np.column_stack(
                [lam0[rows, first[rows]], local[rows, first[rows], 0], local[rows, first[rows], 1]]
            )

    missing = np.flatnonzero(found < 0)
    if missing.size:
        raise OutsideDomain(points[missing[0]])
    return found, bary


def locate_point(m: Mesh, x: Sequence[float]) -> Tuple[int, np.ndarray]:
    """Triangle containing ``x`` (lowest index on ties) and its barycentric coordinates."""

    triangles, bary = locate_points(m, np.asarray(x, dtype=float)[np.newaxis, :])
    return int(triangles[0]), bary[0]
