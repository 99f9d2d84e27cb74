"""``fracmeasure solve``: one fractional solve with measure data."""

from __future__ import annotations

import time

import numpy as np

from ..config import RunConfig
from ..fem import FEFunction, l2_norm
from ..harness import solve_scheme
from ..mesh import mesh_size
from ..numerics import conjugate_gradient
from ..schemas import SolveSummary
from ..writers import write_vtk
from .common import emit_table, load_domain, print_report, scheme_config

NAME = "solve"
HELP = "solve (-Δ)^s u = μ and write the field"


def run(config: RunConfig) -> SolveSummary:
    started = time.perf_counter()
    mesh = load_domain(config)
    h_diam, h_grid = mesh_size(mesh)
    scheme = scheme_config(config)
    result = solve_scheme(scheme, mesh)
    u = result.solution

    fields = {"u": u}
    if config.compare_classical:
        fields["classical"] = FEFunction(mesh, conjugate_gradient(result.stiffness, result.load, tol=config.tol))
    if config.output_vtk:
        write_vtk(config.output_vtk, mesh, fields, title=f"fracmeasure solve s={scheme.params.s:g}")

    nodal = u.nodal_values()
    peak = int(np.argmax(nodal))
    summary = SolveSummary(
        scheme=scheme.scheme,
        n_interior=mesh.num_interior,
        h_diam=h_diam,
        h_grid=h_grid,
        s=scheme.params.s,
        theta=scheme.params.theta,
        Y=result.rule.Y if result.rule is not None else None,
        K=result.rule.K if result.rule is not None else None,
        epsilon=result.epsilon,
        runtime=time.perf_counter() - started,
        u_min=float(nodal.min()),
        u_max=float(nodal.max()),
        argmax=[float(v) for v in mesh.vertices[peak]],
        l2_norm=l2_norm(u, result.mass),
    )
    emit_table(config, summary.headers(), summary.table_rows(), title="solve")
    print_report(summary)
    return summary
