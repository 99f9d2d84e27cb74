"""``fracmeasure converge``: convergence and regularization studies."""

from __future__ import annotations

from ..config import RunConfig, parse_modes
from ..harness import self_convergence, smooth_convergence
from ..mesh import mesh_size
from ..regularize import verify_regularization
from ..schemas import ConvergenceTable, RegularizationTable
from ..spectral import decompose
from ..writers import format_number
from .common import emit_table, load_domain, print_report, scheme_config

NAME = "converge"
HELP = "tabulate self-convergence, smooth-data or regularization studies"

DEFAULT_MODES = "1,1,1"


def run(config: RunConfig) -> ConvergenceTable | RegularizationTable:
    if config.study == "smooth":
        table = smooth_convergence(
            config.frac_params(),
            parse_modes(config.modes or DEFAULT_MODES),
            config.n_values,
            scheme=config.effective_scheme,
            c=config.c,
        )
    elif config.study == "regularization":
        mesh = load_domain(config)
        _, h_grid = mesh_size(mesh)
        eps_list = config.eps_values or [8.0 * h_grid, 4.0 * h_grid, 2.0 * h_grid]
        table = verify_regularization(
            decompose(mesh, max_dim=config.max_dense_dim),
            config.measure_object(),
            eps_list,
            config.frac_params(),
            kind=config.regularization_kind or "mollifier",
        )
    else:
        table = self_convergence(scheme_config(config), config.n_values, config.reference_n)

    emit_table(config, table.headers(), table.table_rows(), title=f"{config.study} study")
    print_report(table, exclude=("rows",))
    for row in table.table_rows():
        print("  ".join(format_number(value) for value in row))
    return table
