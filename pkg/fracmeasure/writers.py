"""Legacy ASCII VTK fields and CSV tables."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Dict, Iterable, Sequence

import numpy as np

from .errors import ParseError
from .fem import FEFunction
from .mesh import Mesh
from .storage import write_text

VTK_TRIANGLE = 5


def format_number(value: object) -> str:
    """Numbers with 12 significant digits; None becomes an empty cell."""

    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def csv_text(headers: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(headers))
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def write_csv(path: str | Path, headers: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    """Comma-separated table with a header row."""

    return write_text(path, csv_text(headers, rows))


def vtk_text(m: Mesh, fields: Dict[str, FEFunction], title: str = "fracmeasure") -> str:
    lines = ["# vtk DataFile Version 2.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {m.num_vertices} double")
    lines.extend(f"{x:.17g} {y:.17g} 0" for x, y in m.vertices)
    lines.append(f"CELLS {m.num_triangles} {4 * m.num_triangles}")
    lines.extend(f"3 {i} {j} {k}" for i, j, k in m.triangles)
    lines.append(f"CELL_TYPES {m.num_triangles}")
    lines.extend(str(VTK_TRIANGLE) for _ in range(m.num_triangles))
    if fields:
        lines.append(f"POINT_DATA {m.num_vertices}")
    for name, u in fields.items():
        if u.mesh is not m:
            raise ValueError(f"field {name!r} lives on another mesh")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{value:.17g}" for value in u.nodal_values())
    return "\n".join(lines) + "\n"


def write_vtk(path: str | Path, m: Mesh, fields: Dict[str, FEFunction], title: str = "fracmeasure") -> Path:
    """Nodal fields on all vertices; boundary vertices carry 0."""

    return write_text(path, vtk_text(m, fields, title))


def read_vtk_point_count(path: str | Path) -> int:
    """Number of points declared by a legacy VTK file."""

    with Path(path).open("r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            parts = line.split()
            if parts and parts[0] == "POINTS":
                try:
                    return int(parts[1])
                except (IndexError, ValueError) as exc:
                    raise ParseError("malformed POINTS header", number) from exc
    raise ParseError("no POINTS section", 0)
