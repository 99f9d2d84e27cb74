"""``fracmeasure eig``: spectrum of the discrete Dirichlet Laplacian."""

from __future__ import annotations

import math

from ..config import RunConfig
from ..mesh import mesh_size
from ..numerics import EigenPairs, pencil_residual
from ..schemas import EigReport
from ..spectral import decompose
from .common import emit_table, load_domain, print_report

NAME = "eig"
HELP = "eigendecompose the discrete Laplacian and check the spectrum"

# first Dirichlet eigenvalue of the unit square
UNIT_SQUARE_LAMBDA1 = 2.0 * math.pi**2


def run(config: RunConfig) -> EigReport:
    mesh = load_domain(config)
    h_diam, h_grid = mesh_size(mesh)
    E = decompose(mesh, max_dim=config.max_dense_dim)
    residual, defect = pencil_residual(E.stiffness, E.mass, EigenPairs(E.values, E.vectors))
    on_square = config.mesh_file is None
    report = EigReport(
        n_interior=E.dimension,
        h_diam=h_diam,
        h_grid=h_grid,
        smallest=E.smallest,
        largest=E.largest,
        poincare_constant=E.poincare_constant(),
        rayleigh_bound=UNIT_SQUARE_LAMBDA1 if on_square else None,
        rayleigh_bound_holds=bool(E.smallest >= UNIT_SQUARE_LAMBDA1) if on_square else None,
        residual=residual,
        orthonormality_defect=defect,
        values=[float(v) for v in E.values],
    )
    emit_table(config, report.headers(), report.table_rows(), title="eigenvalues")
    print_report(report, exclude=("values",))
    return report
