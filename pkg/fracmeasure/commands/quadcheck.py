"""``fracmeasure quadcheck``: certify the scalar rational approximation."""

from __future__ import annotations

import numpy as np

from ..config import RunConfig
from ..quadrature import build_rule, select_params
from ..schemas import QuadCheckReport, ScalarErrorRow
from .common import emit_table, print_report

NAME = "quadcheck"
HELP = "compare λ^-s with the diagonalization rule on a λ grid"

EQUAL_WEIGHTS_TOL = 1e-12


def run(config: RunConfig) -> QuadCheckReport:
    s = config.s
    if config.Y is not None:
        Y, K = config.Y, config.K
    else:
        Y, K = select_params(s, 1.0 / config.n, config.c)
    rule = build_rule(s, Y, K)
    grid = np.geomspace(config.lambda_min, config.lambda_max, config.lambda_points)
    exact = grid ** (-s)
    approx = rule.approximate(grid)
    abs_error = np.abs(exact - approx)
    rows = [
        ScalarErrorRow(lam=lam, exact=e, approximation=a, abs_error=d, rel_error=d / e)
        for lam, e, a, d in zip(grid, exact, approx, abs_error)
    ]
    report = QuadCheckReport(
        s=s,
        Y=Y,
        K=K,
        upsilon_min=float(rule.upsilon[0]),
        upsilon_max=float(rule.upsilon[-1]),
        psi_min=float(rule.psi.min()),
        psi_max=float(rule.psi.max()),
        psi_all_equal=bool(np.all(np.abs(rule.psi - rule.psi[0]) <= EQUAL_WEIGHTS_TOL * rule.psi[0])),
        max_rel_error=float(np.max(abs_error / exact)),
        rows=rows,
    )
    emit_table(config, report.headers(), report.table_rows(), title="scalar error")
    print_report(report, exclude=("rows",))
    return report
