from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracmeasure.control import (
    ControlProblem,
    IdealOperator,
    PracticalOperator,
    evaluate_cost,
    observation_lipschitz,
    observations,
    project_admissible,
    reduced_cost,
    reduced_gradient,
    solve_adjoint,
    solve_ocp,
    solve_state,
)
from fracmeasure.errors import NoConvergence, OutsideDomain
from fracmeasure.fem import Density, FEFunction, interpolate, l2_error, l2_norm, measure_load, PointDirac, zero_function
from fracmeasure.quadrature import build_rule, select_params
from fracmeasure.spectral import solve_ideal

POINTS = ((0.3, 0.7), (0.6, 0.4))
TARGETS = (1.0, -0.5)


def sine_bump(x, y):
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def problem(**overrides) -> ControlProblem:
    values = dict(points=POINTS, targets=TARGETS, alpha=0.1, lower=-5.0, upper=5.0)
    values.update(overrides)
    return ControlProblem(**values)


def random_direction(m, seed: int) -> FEFunction:
    return FEFunction(m, np.random.default_rng(seed).standard_normal(m.num_interior))


@pytest.fixture(scope="module")
def ocp32(eig32, params):
    return solve_ocp(eig32, params, problem(), tol=1e-10)


class TestControlProblem:
    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            problem(alpha=0.0)

    def test_bounds_ordered(self):
        with pytest.raises(ValueError):
            problem(lower=1.0, upper=1.0)

    def test_bounds_finite(self):
        with pytest.raises(ValueError):
            problem(upper=math.inf)

    def test_one_target_per_point(self):
        with pytest.raises(ValueError):
            problem(targets=(1.0,))

    def test_needs_points(self):
        with pytest.raises(ValueError):
            problem(points=(), targets=())

    def test_points_interior(self, square16):
        with pytest.raises(OutsideDomain):
            problem(points=((0.0, 0.5),), targets=(1.0,)).check_on(square16)


class TestStateAndAdjoint:
    def test_zero(self, eig16, params):
        u = solve_state(eig16, params, None, zero_function(eig16.mesh))
        assert not np.any(u.coeffs)

    def test_linearity(self, eig16, params):
        m = eig16.mesh
        f = Density(sine_bump)
        q1 = interpolate(m, lambda x, y: x * (1 - x))
        q2 = interpolate(m, lambda x, y: np.cos(3 * y))
        left = solve_state(eig16, params, f, q1 + q2)
        right = solve_state(eig16, params, f, q1) + solve_state(eig16, params, None, q2)
        assert_allclose(left.coeffs, right.coeffs, atol=1e-12)

    def test_forcing_only(self, eig16, params):
        u = solve_state(eig16, params, Density(sine_bump, order=5), zero_function(eig16.mesh))
        scale = (2.0 * math.pi**2) ** (-params.s)
        assert l2_error(u, lambda x, y: scale * sine_bump(x, y)) < 5e-3

    def test_adjoint_vanishes_on_targets(self, eig16, params):
        u = solve_state(eig16, params, Density(sine_bump), zero_function(eig16.mesh))
        prob = problem(targets=tuple(observations(u, problem())))
        assert l2_norm(solve_adjoint(eig16, params, u, prob), eig16.mass) == pytest.approx(0.0, abs=1e-14)

    def test_adjoint_single_vertex(self, eig16, params):
        m = eig16.mesh
        index = 37
        vertex = tuple(m.vertices[m.interior_nodes[index]])
        unit = np.zeros(m.num_interior)
        unit[index] = 1.0
        prob = ControlProblem(points=(vertex,), targets=(-1.0,), alpha=0.1, lower=-1.0, upper=1.0)
        adjoint = solve_adjoint(eig16, params, zero_function(m), prob)
        assert_allclose(adjoint.coeffs, solve_ideal(eig16, params, unit).coeffs, atol=1e-12)

    def test_adjoint_symmetry(self, eig16, params):
        m = eig16.mesh
        prob = ControlProblem(points=((0.25, 0.75), (0.75, 0.25)), targets=(-1.0, -1.0), alpha=0.1, lower=-1.0, upper=1.0)
        adjoint = solve_adjoint(eig16, params, zero_function(m), prob)
        grid = adjoint.nodal_values().reshape(17, 17)
        assert np.abs(grid - grid.T).max() <= 1e-9


class TestProjectionAndCost:
    def test_projection(self, square8):
        inside = interpolate(square8, lambda x, y: x - y)
        assert_allclose(project_admissible(inside, -1.0, 1.0).coeffs, inside.coeffs)
        constant = FEFunction(square8, np.full(square8.num_interior, 10.0))
        assert_allclose(project_admissible(constant, 0.0, 1.0).coeffs, 1.0)
        v = interpolate(square8, lambda x, y: 4 * x - 2)
        once = project_admissible(v, -1.0, 1.0)
        assert_allclose(project_admissible(once, -1.0, 1.0).coeffs, once.coeffs)

    def test_projection_bounds(self, square8):
        with pytest.raises(ValueError):
            project_admissible(zero_function(square8), 1.0, 0.0)

    def test_cost_zero_on_targets(self, eig16, params):
        u = solve_state(eig16, params, Density(sine_bump), zero_function(eig16.mesh))
        prob = problem(targets=tuple(observations(u, problem())))
        assert evaluate_cost(u, zero_function(eig16.mesh), prob, eig16.mass) == pytest.approx(0.0, abs=1e-20)

    def test_cost_single_residual(self, eig16):
        prob = ControlProblem(points=((0.3, 0.7),), targets=(2.0,), alpha=0.1, lower=-1.0, upper=1.0)
        m = eig16.mesh
        assert evaluate_cost(zero_function(m), zero_function(m), prob, eig16.mass) == pytest.approx(2.0)

    def test_gradient_matches_finite_differences(self, eig16, params):
        prob = problem()
        q = interpolate(eig16.mesh, lambda x, y: 0.3 * np.sin(2 * x) * y)
        gradient = reduced_gradient(eig16, params, prob, q)
        delta = 1e-5
        for seed in range(5):
            e = random_direction(eig16.mesh, seed)
            exact = float(gradient.coeffs @ (eig16.mass @ e.coeffs))
            plus = reduced_cost(eig16, params, prob, q + delta * e)
            minus = reduced_cost(eig16, params, prob, q - delta * e)
            assert (plus - minus) / (2 * delta) == pytest.approx(exact, rel=1e-4)


class TestSolveOCP:
    def test_optimality(self, ocp32, eig32):
        assert ocp32.vi_residual <= 1e-8
        target = project_admissible(FEFunction(eig32.mesh, -ocp32.adjoint.coeffs / 0.1), -5.0, 5.0)
        assert l2_norm(ocp32.control - target, eig32.mass) <= 1e-8

    def test_box_feasible(self, ocp32):
        assert ocp32.control.coeffs.min() >= -5.0
        assert ocp32.control.coeffs.max() <= 5.0

    def test_cost_non_increasing(self, ocp32):
        history = np.asarray(ocp32.cost_history)
        assert np.all(np.diff(history) <= 64 * np.finfo(float).eps * np.abs(history[:-1]).clip(min=1.0))
        assert ocp32.cost == history[-1]

    def test_gradient_at_optimum(self, ocp32, eig32, params):
        prob = problem()
        gradient = reduced_gradient(eig32, params, prob, ocp32.control)
        delta = 1e-5
        for seed in range(5):
            e = random_direction(eig32.mesh, 10 + seed)
            exact = float(gradient.coeffs @ (eig32.mass @ e.coeffs))
            plus = reduced_cost(eig32, params, prob, ocp32.control + delta * e)
            minus = reduced_cost(eig32, params, prob, ocp32.control - delta * e)
            assert (plus - minus) / (2 * delta) == pytest.approx(exact, rel=1e-4, abs=1e-8)

    def test_large_alpha(self, eig16, params):
        prob = problem(alpha=1e6)
        solution = solve_ocp(eig16, params, prob)
        assert np.abs(solution.control.coeffs).max() < 1e-4
        tracking = 0.5 * sum(t * t for t in TARGETS)
        assert solution.cost == pytest.approx(tracking, rel=1e-6)
        assert solution.cost == pytest.approx(evaluate_cost(solution.state, solution.control, prob, eig16.mass))

    def test_pinned_control(self, eig16, params):
        forcing = Density(sine_bump)
        prob = problem(lower=0.0, upper=1e-12, forcing=forcing)
        solution = solve_ocp(eig16, params, prob)
        assert np.all(solution.control.coeffs >= 0.0)
        assert np.all(solution.control.coeffs <= 1e-12)
        free = solve_state(eig16, params, forcing, zero_function(eig16.mesh))
        assert l2_norm(solution.state - free, eig16.mass) <= 1e-10

    def test_inactive_bounds_perturbation(self, eig16, params):
        prob = ControlProblem(points=((0.4, 0.6),), targets=(0.5,), alpha=0.1, lower=-10.0, upper=10.0)
        solution = solve_ocp(eig16, params, prob, tol=1e-11)
        assert_allclose(solution.control.coeffs, -solution.adjoint.coeffs / prob.alpha, atol=1e-8)
        base = reduced_cost(eig16, params, prob, solution.control)
        for seed in range(10):
            e = random_direction(eig16.mesh, 100 + seed)
            for sign in (1.0, -1.0):
                trial = solution.control + (sign * 1e-4) * e
                assert reduced_cost(eig16, params, prob, trial) >= base - 1e-10

    def test_budget_exhausted(self, eig16, params):
        with pytest.raises(NoConvergence) as info:
            solve_ocp(eig16, params, problem(), tol=1e-14, maxit=2)
        assert info.value.iterations == 2
        assert isinstance(info.value.last_iterate, FEFunction)

    def test_invalid_omega(self, eig16, params):
        with pytest.raises(ValueError):
            solve_ocp(eig16, params, problem(), omega=1.5)

    def test_lipschitz_positive(self, eig16, params):
        lipschitz = observation_lipschitz(IdealOperator(eig16, params.s), problem())
        assert lipschitz > 0.0
        greens = solve_ideal(eig16, params, measure_load(eig16.mesh, PointDirac(POINTS[0])))
        assert lipschitz >= l2_norm(greens, eig16.mass) ** 2 * (1 - 1e-12)

    def test_practical_operator(self, eig16, params):
        m = eig16.mesh
        Y, K = select_params(params.s, 1.0 / 16)
        operator = PracticalOperator(
            mesh=m, stiffness=eig16.stiffness, mass=eig16.mass, rule=build_rule(params.s, Y, K), epsilon=1.0 / 16
        )
        solution = solve_ocp(None, params, problem(), tol=1e-8, operator=operator)
        assert solution.vi_residual <= 1e-8
        ideal = solve_ocp(eig16, params, problem(), tol=1e-8)
        assert l2_norm(solution.control - ideal.control, eig16.mass) < 0.5 * l2_norm(ideal.control, eig16.mass)
