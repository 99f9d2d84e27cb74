"""Helpers shared by the command handlers."""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

from pydantic import BaseModel

from ..config import RunConfig
from ..excel import write_xlsx
from ..harness import SchemeConfig
from ..mesh import Mesh, build_structured_square, load_mesh
from ..writers import format_number, write_csv

logger = logging.getLogger(__name__)


def load_domain(config: RunConfig) -> Mesh:
    """The configured mesh file, or the structured unit square with n subdivisions."""

    if config.mesh_file is not None:
        return load_mesh(config.mesh_file)
    return build_structured_square(config.n)


def scheme_config(config: RunConfig) -> SchemeConfig:
    return SchemeConfig(
        scheme=config.effective_scheme,
        params=config.frac_params(),
        measure=config.measure_object(),
        regularization=config.regularization_kind,
        epsilon_factor=config.eps_factor,
        epsilon=config.epsilon,
        c=config.c,
        Y=config.Y,
        K=config.K,
        inner_tol=config.tol,
        workers=config.workers,
        max_dense_dim=config.max_dense_dim,
    )


def emit_table(config: RunConfig, headers: Sequence[str], rows: Iterable[Sequence[object]], *, title: str) -> None:
    """Write the table to the configured CSV and XLSX paths."""

    rows = [list(row) for row in rows]
    if config.output_csv:
        path = write_csv(config.output_csv, headers, rows)
        logger.info("wrote %s", path)
    if config.output_xlsx:
        settings = config.model_dump(exclude_defaults=True, exclude={"output_csv", "output_xlsx", "output_vtk"})
        path = write_xlsx(config.output_xlsx, headers, rows, title=title, metadata={"command": config.command, **settings})
        logger.info("wrote %s", path)


def print_report(report: BaseModel, *, exclude: Iterable[str] = ()) -> None:
    """One ``key: value`` line per scalar field."""

    for key, value in report.model_dump(exclude=set(exclude)).items():
        if isinstance(value, list) and value and not isinstance(value[0], (int, float)):
            continue
        if isinstance(value, list):
            value = ", ".join(format_number(item) for item in value) if len(value) <= 4 else f"[{len(value)} values]"
        print(f"{key}: {format_number(value)}")
