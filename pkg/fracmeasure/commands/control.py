"""``fracmeasure control``: pointwise-tracking optimal control."""

from __future__ import annotations

import time

from ..config import RunConfig, parse_modes
from ..control import ControlProblem, PracticalOperator, solve_ocp
from ..fem import Density, assemble_mass, assemble_stiffness
from ..harness import sine_modes
from ..mesh import mesh_size
from ..quadrature import build_rule, select_params
from ..schemas import ControlSummary
from ..spectral import decompose
from ..writers import write_vtk
from .common import emit_table, load_domain, print_report

NAME = "control"
HELP = "solve the box-constrained pointwise-tracking control problem"


def run(config: RunConfig) -> ControlSummary:
    started = time.perf_counter()
    mesh = load_domain(config)
    params = config.frac_params()
    forcing = None
    if config.modes is not None:
        forcing = Density(sine_modes(parse_modes(config.modes)), order=config.density_order)
    problem = ControlProblem(
        points=tuple(config.observation_points),
        targets=tuple(config.target_values),
        alpha=config.alpha,
        lower=config.lower,
        upper=config.upper,
        forcing=forcing,
    )

    decomposition = None
    operator = None
    if config.effective_scheme == "ideal":
        decomposition = decompose(mesh, max_dim=config.max_dense_dim)
    else:
        _, h_grid = mesh_size(mesh)
        Y, K = (config.Y, config.K) if config.Y is not None else select_params(params.s, h_grid, config.c)
        operator = PracticalOperator(
            mesh=mesh,
            stiffness=assemble_stiffness(mesh),
            mass=assemble_mass(mesh),
            rule=build_rule(params.s, Y, K),
            epsilon=config.epsilon or config.eps_factor * h_grid,
            tol=config.tol,
            workers=config.workers,
        )

    solution = solve_ocp(
        decomposition, params, problem, config.ocp_tol, config.ocp_maxit, omega=config.omega, operator=operator
    )
    if config.output_vtk:
        write_vtk(
            config.output_vtk,
            mesh,
            {"control": solution.control, "state": solution.state, "adjoint": solution.adjoint},
            title="fracmeasure control",
        )
    summary = ControlSummary(
        iterations=solution.iterations,
        omega=solution.omega,
        lipschitz=solution.lipschitz,
        cost=solution.cost,
        vi_residual=solution.vi_residual,
        q_min=float(solution.control.coeffs.min()),
        q_max=float(solution.control.coeffs.max()),
        runtime=time.perf_counter() - started,
        cost_history=solution.cost_history,
    )
    emit_table(config, summary.headers(), summary.table_rows(), title="cost history")
    print_report(summary, exclude=("cost_history",))
    return summary
