"""Pydantic schemas for tables and run summaries."""

from __future__ import annotations

import math
from typing import List, Sequence

from pydantic import BaseModel, Field, field_validator, model_validator


def observed_order(e_prev: float, e_next: float, h_prev: float, h_next: float) -> float:
    """log(e_prev/e_next) / log(h_prev/h_next)."""

    return math.log(e_prev / e_next) / math.log(h_prev / h_next)


class ConvergenceRow(BaseModel):
    n: int
    h_grid: float
    error: float
    observed_order: float | None = None


class ConvergenceTable(BaseModel):
    scheme: str
    norm: str = "L2"
    s: float
    theta: float
    measure: str
    rows: List[ConvergenceRow] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_rows(self) -> "ConvergenceTable":
        ns = [row.n for row in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("n must be strictly increasing")
        if self.rows and self.rows[0].observed_order is not None:
            raise ValueError("the first row has no observed order")
        for prev, row in zip(self.rows, self.rows[1:]):
            if row.observed_order is None:
                continue
            expected = observed_order(prev.error, row.error, prev.h_grid, row.h_grid)
            if not math.isclose(row.observed_order, expected, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"observed order at n={row.n} does not match its errors")
        return self

    @property
    def errors(self) -> List[float]:
        return [row.error for row in self.rows]

    @property
    def orders(self) -> List[float | None]:
        return [row.observed_order for row in self.rows]

    def headers(self) -> List[str]:
        return ["n", "h_grid", "error", "observed_order"]

    def table_rows(self) -> List[Sequence[object]]:
        return [[row.n, row.h_grid, row.error, row.observed_order] for row in self.rows]


class RegularizationRow(BaseModel):
    epsilon: float
    negative_norm: float
    l2_norm: float
    mass: float


class RegularizationTable(BaseModel):
    kind: str
    s: float
    theta: float
    rows: List[RegularizationRow] = Field(default_factory=list)
    negative_norm_exponent: float
    l2_exponent: float

    def headers(self) -> List[str]:
        return ["epsilon", "negative_norm", "l2_norm", "mass"]

    def table_rows(self) -> List[Sequence[object]]:
        return [[row.epsilon, row.negative_norm, row.l2_norm, row.mass] for row in self.rows]


class ScalarErrorRow(BaseModel):
    lam: float
    exact: float
    approximation: float
    abs_error: float
    rel_error: float


class QuadCheckReport(BaseModel):
    s: float
    Y: float
    K: int
    upsilon_min: float
    upsilon_max: float
    psi_min: float
    psi_max: float
    psi_all_equal: bool
    max_rel_error: float
    rows: List[ScalarErrorRow] = Field(default_factory=list)

    def headers(self) -> List[str]:
        return ["lambda", "exact", "approximation", "abs_error", "rel_error"]

    def table_rows(self) -> List[Sequence[object]]:
        return [[row.lam, row.exact, row.approximation, row.abs_error, row.rel_error] for row in self.rows]


class EigReport(BaseModel):
    n_interior: int
    h_diam: float
    h_grid: float
    smallest: float
    largest: float
    poincare_constant: float
    rayleigh_bound: float | None = None
    rayleigh_bound_holds: bool | None = None
    residual: float
    orthonormality_defect: float
    values: List[float] = Field(default_factory=list)

    def headers(self) -> List[str]:
        return ["index", "eigenvalue"]

    def table_rows(self) -> List[Sequence[object]]:
        return [[i + 1, value] for i, value in enumerate(self.values)]


class SolveSummary(BaseModel):
    scheme: str
    n_interior: int
    h_diam: float
    h_grid: float
    s: float
    theta: float
    Y: float | None = None
    K: int | None = None
    epsilon: float | None = None
    runtime: float
    u_min: float
    u_max: float
    argmax: List[float]
    l2_norm: float

    @field_validator("argmax")
    @classmethod
    def _point(cls, value: List[float]) -> List[float]:
        if len(value) != 2:
            raise ValueError("argmax must be a 2D point")
        return value

    def headers(self) -> List[str]:
        return [
            "scheme", "n_interior", "h_diam", "h_grid", "s", "theta", "Y", "K", "epsilon",
            "u_min", "u_max", "argmax_x", "argmax_y", "l2_norm",
        ]

    def table_rows(self) -> List[Sequence[object]]:
        # runtime stays out so repeated runs write identical tables
        return [
            [
                self.scheme, self.n_interior, self.h_diam, self.h_grid, self.s, self.theta, self.Y, self.K,
                self.epsilon, self.u_min, self.u_max, self.argmax[0], self.argmax[1], self.l2_norm,
            ]
        ]


class ControlSummary(BaseModel):
    iterations: int
    omega: float
    lipschitz: float
    cost: float
    vi_residual: float
    q_min: float
    q_max: float
    runtime: float
    cost_history: List[float] = Field(default_factory=list)

    def headers(self) -> List[str]:
        return ["iteration", "cost"]

    def table_rows(self) -> List[Sequence[object]]:
        return [[i, cost] for i, cost in enumerate(self.cost_history)]
