from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fracmeasure.fem import Density, PointDirac, evaluate, interpolate, measure_load
from fracmeasure.harness import (
    SchemeConfig,
    analytic_reference_square,
    compare_schemes,
    discrepancy_bound,
    observed_orders,
    prolong,
    self_convergence,
    sine_modes,
    smooth_convergence,
)
from fracmeasure.quadrature import build_rule, select_params
from fracmeasure.schemas import ConvergenceRow, ConvergenceTable
from fracmeasure.spectral import FracParams

MODE = ((1, 1, 1.0),)


def smooth_density() -> Density:
    return Density(sine_modes(MODE), order=5)


class TestAnalyticReference:
    def test_first_mode(self):
        field = analytic_reference_square(0.65, MODE)
        expected = 2.0 * (2.0 * math.pi**2) ** (-0.65)
        assert field(0.5, 0.5) == pytest.approx(expected)

    def test_zero_order(self):
        modes = ((1, 1, 1.0), (2, 3, -0.5))
        xs = np.linspace(0.05, 0.95, 7)
        assert np.allclose(analytic_reference_square(0.0, modes)(xs, xs[::-1]), sine_modes(modes)(xs, xs[::-1]))

    def test_boundary_values(self):
        field = analytic_reference_square(0.4, ((1, 2, 1.0),))
        assert field(0.0, 0.3) == pytest.approx(0.0, abs=1e-14)
        assert field(0.7, 1.0) == pytest.approx(0.0, abs=1e-14)


class TestObservedOrders:
    def test_second_order(self):
        orders = observed_orders([0.25, 0.125, 0.0625], [1e-2, 2.5e-3, 6.25e-4])
        assert orders[0] is None
        assert orders[1] == pytest.approx(2.0)
        assert orders[2] == pytest.approx(2.0)

    def test_noise_floor(self):
        orders = observed_orders([0.25, 0.125, 0.0625], [1e-3, 2.5e-4, 1e-20], floor=1e-15)
        assert orders == [None, pytest.approx(2.0), None]


class TestConvergenceTable:
    def test_first_row_has_no_order(self):
        with pytest.raises(ValidationError):
            ConvergenceTable(
                scheme="ideal", s=0.5, theta=0.5, measure="density", rows=[ConvergenceRow(n=4, h_grid=0.25, error=1.0, observed_order=1.0)]
            )

    def test_increasing_n(self):
        rows = [ConvergenceRow(n=8, h_grid=0.125, error=1.0), ConvergenceRow(n=4, h_grid=0.25, error=2.0)]
        with pytest.raises(ValidationError):
            ConvergenceTable(scheme="ideal", s=0.5, theta=0.5, measure="density", rows=rows)

    def test_order_consistent_with_errors(self):
        rows = [
            ConvergenceRow(n=4, h_grid=0.25, error=1e-2),
            ConvergenceRow(n=8, h_grid=0.125, error=2.5e-3, observed_order=1.0),
        ]
        with pytest.raises(ValidationError):
            ConvergenceTable(scheme="ideal", s=0.5, theta=0.5, measure="density", rows=rows)


class TestProlong:
    def test_preserves_coarse_values(self, square8, square16):
        u = interpolate(square8, lambda x, y: np.sin(np.pi * x) * y * (1 - y))
        fine = prolong(u, square16)
        for index, vertex in zip(square8.interior_nodes, square8.vertices[square8.interior_nodes]):
            assert evaluate(fine, vertex) == pytest.approx(u.nodal_values()[index], abs=1e-14)


class TestSelfConvergence:
    def test_ideal_dirac(self, params):
        config = SchemeConfig("ideal", params, PointDirac((0.3, 0.7)))
        table = self_convergence(config, [4, 8, 16])
        errors = table.errors
        assert errors[0] > errors[1] > 0.0
        assert errors[2] == 0.0
        assert table.orders[2] is None
        assert table.measure == "dirac(0.3,0.7)"

    def test_nested_meshes(self, params):
        config = SchemeConfig("ideal", params, PointDirac((0.3, 0.7)))
        with pytest.raises(ValueError):
            self_convergence(config, [4, 6, 16])
        with pytest.raises(ValueError):
            self_convergence(config, [8, 4])

    def test_unknown_scheme(self, params):
        with pytest.raises(ValueError):
            SchemeConfig("exact", params, PointDirac((0.3, 0.7)))

    @pytest.mark.slow
    def test_ideal_dirac_four_levels(self, params):
        config = SchemeConfig("ideal", params, PointDirac((0.3, 0.7)))
        table = self_convergence(config, [8, 16, 32, 64])
        errors = table.errors
        assert all(a > b for a, b in zip(errors, errors[1:]))
        orders = [order for order in table.orders if order is not None]
        assert len(orders) >= 2
        assert min(orders) >= 0.05

    @pytest.mark.slow
    def test_practical_dirac_four_levels(self, params):
        config = SchemeConfig("practical", params, PointDirac((0.3, 0.7)))
        table = self_convergence(config, [16, 32, 64, 128])
        errors = table.errors
        assert errors[-1] > 0.0
        assert all(a > b for a, b in zip(errors, errors[1:]))

    @pytest.mark.slow
    def test_practical_dirac(self, params):
        config = SchemeConfig("practical", params, PointDirac((0.3, 0.7)))
        table = self_convergence(config, [8, 16], reference_n=32)
        assert table.errors[0] > table.errors[1] > 0.0
        assert table.orders[1] > 0.0


class TestSmoothConvergence:
    def test_ideal_order(self, params):
        table = smooth_convergence(params, MODE, [8, 16, 32])
        assert table.errors[0] > table.errors[1] > table.errors[2]
        assert table.orders[-1] >= 1.5
        assert table.measure == "sine-modes"


class TestCompareSchemes:
    def test_within_discrepancy_bound(self, eig32, params):
        Y, K = select_params(params.s, 1.0 / 32)
        rule = build_rule(params.s, Y, K)
        g = measure_load(eig32.mesh, smooth_density())
        distance = compare_schemes(eig32, rule, g, params, tol=1e-12)
        assert distance <= discrepancy_bound(eig32, rule, g) * (1 + 1e-6) + 1e-10

    def test_more_terms(self, eig16, params):
        Y, K = select_params(params.s, 1.0 / 16)
        coarse = compare_schemes(eig16, build_rule(params.s, Y, K // 2), smooth_density(), params, tol=1e-12)
        fine = compare_schemes(eig16, build_rule(params.s, Y, K), smooth_density(), params, tol=1e-12)
        assert fine <= coarse * (1 + 1e-6) + 1e-12

    def test_regularized_dirac(self, eig16, params):
        Y, K = select_params(params.s, 1.0 / 16)
        distance = compare_schemes(eig16, build_rule(params.s, Y, K), PointDirac((0.3, 0.7)), params, kind="disk")
        assert 0.0 <= distance < 1e-1
