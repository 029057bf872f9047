#!/usr/bin/env python3
"""
Tests for the tridiagonal algebra and the Newton steady-state solver
"""
import sys
from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from asymptotics import composite, matched_boundary
from core import BoundaryPair, Field, Grid
from discretization import (TriDiag, burgers_jacobian, burgers_operator, newton_solve_steady,
                            resolution_rule, steady_jacobian, steady_residual)
from errors import NoConvergenceError, SingularJacobianError


def _random_tridiag(n, seed=0):
    rng = np.random.default_rng(seed)
    lower = rng.uniform(-1, 1, n - 1)
    upper = rng.uniform(-1, 1, n - 1)
    diag = 4.0 + rng.uniform(0, 1, n)
    return TriDiag(lower, diag, upper)


@pytest.mark.parametrize('eps, n', [(0.5, 401), (0.1, 401), (0.04, 401), (0.01, 1601), (0.02, 801)])
def test_resolution_rule(eps, n):
    assert resolution_rule(eps) == n


def test_tridiag_matches_dense():
    A = _random_tridiag(12)
    v = np.linspace(-1.0, 2.0, 12)
    dense = A.to_dense()
    npt.assert_allclose(A.matvec(v), dense @ v, rtol=1e-14)
    npt.assert_allclose(A.solve(v), np.linalg.solve(dense, v), rtol=1e-12)
    npt.assert_allclose(A.norm_inf(), np.max(np.abs(dense).sum(axis=1)), rtol=1e-14)
    assert not A.is_symmetric()
    assert TriDiag(A.upper, A.diag, A.upper).is_symmetric()


def test_tridiag_rejects_bad_bands():
    with pytest.raises(ValueError):
        TriDiag(np.zeros(3), np.ones(5), np.zeros(4))
    with pytest.raises(SingularJacobianError):
        TriDiag(np.zeros(2), np.array([1.0, np.inf, 1.0]), np.zeros(2))


def test_singular_solve_raises():
    A = TriDiag(np.zeros(2), np.zeros(3), np.zeros(2))
    with pytest.raises(SingularJacobianError):
        A.solve(np.ones(3))


def test_operator_on_linear_state():
    g = Grid(-1.0, 1.0, 21)
    out = burgers_operator(g.x, g.dx, 0.1)
    assert out[0] == 0.0 and out[-1] == 0.0
    # u = x: u_xx = 0, u*u_x = x
    npt.assert_allclose(out[1:-1], -g.x[1:-1], atol=1e-12)


def test_jacobian_matches_directional_derivative():
    g = Grid(-1.0, 1.0, 21)
    u = np.sin(np.pi * g.x) + 0.3 * g.x
    v = np.cos(2.0 * g.x)
    h = 1e-4
    fd = (burgers_operator(u + h * v, g.dx, 0.1) - burgers_operator(u - h * v, g.dx, 0.1)) / (2 * h)
    npt.assert_allclose(burgers_jacobian(u, g.dx, 0.1).matvec(v), fd, atol=1e-8)


def test_steady_residual_boundary_rows():
    g = Grid(-1.0, 1.0, 11)
    u = Field(g, np.full(g.n, 0.5))
    r = steady_residual(u, 0.1, BoundaryPair(1.0, -1.0))
    assert r.values[0] == -0.5
    assert r.values[-1] == 1.5
    npt.assert_array_equal(r.values[1:-1], 0.0)
    jac = steady_jacobian(u, 0.1)
    assert jac.diag[0] == 1.0 and jac.upper[0] == 0.0
    assert jac.diag[-1] == 1.0 and jac.lower[-1] == 0.0


def test_newton_from_composite_guess():
    eps, g = 0.1, Grid(-1.0, 1.0, 801)
    p = composite(1.0, 0.0, eps)
    result = newton_solve_steady(eps, BoundaryPair(1.0, -1.0), p.sample(g))
    assert result.iterations <= 4
    assert result.residual_history[-1] <= 1e-10
    assert np.max(np.abs(result.u.values - p.value(g.x))) <= 5e-4
    assert result.u.values[0] == 1.0 and result.u.values[-1] == -1.0


def test_newton_from_linear_ramp_reaches_same_state():
    eps, g = 0.1, Grid(-1.0, 1.0, 801)
    bc = BoundaryPair(1.0, -1.0)
    from_composite = newton_solve_steady(eps, bc, composite(1.0, 0.0, eps).sample(g))
    from_ramp = newton_solve_steady(eps, bc, Field(g, -g.x))
    npt.assert_allclose(from_ramp.u.values, from_composite.u.values, atol=1e-8)


def test_exact_root_takes_no_iterations():
    g = Grid(-1.0, 1.0, 401)
    bc = BoundaryPair(1.0, -1.0)
    first = newton_solve_steady(0.2, bc, composite(1.0, 0.0, 0.2).sample(g))
    again = newton_solve_steady(0.2, bc, first.u)
    assert again.iterations == 0
    npt.assert_array_equal(again.u.values, first.u.values)

    zero = newton_solve_steady(0.2, BoundaryPair(0.0, 0.0), Field(g, np.zeros(g.n)))
    assert zero.iterations == 0
    assert len(zero.residual_history) == 1


def test_newton_iteration_limit():
    g = Grid(-1.0, 1.0, 401)
    with pytest.raises(NoConvergenceError) as info:
        newton_solve_steady(0.1, BoundaryPair(1.0, -1.0), Field(g, -g.x), max_iter=1)
    assert info.value.iterations == 1


def test_second_order_grid_convergence():
    eps = 0.25
    p = composite(1.0, 0.0, eps)
    bc = matched_boundary(p)
    errors = []
    for n in (101, 201, 401):
        g = Grid(-1.0, 1.0, n)
        u = newton_solve_steady(eps, bc, p.sample(g)).u
        errors.append(np.max(np.abs(u.values - p.value(g.x))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.8)


def test_newton_converges_quadratically():
    eps, g = 0.1, Grid(-1.0, 1.0, 801)
    history = newton_solve_steady(eps, BoundaryPair(1.0, -1.0), Field(g, -g.x)).residual_history
    assert len(history) >= 3
    for before, after in zip(history[:-1], history[1:]):
        assert after <= 1e4 * before ** 2 or after <= 1e-10


def test_steady_state_is_odd():
    eps, g = 0.1, Grid(-1.0, 1.0, 801)
    u = newton_solve_steady(eps, BoundaryPair(1.0, -1.0), composite(1.0, 0.0, eps).sample(g)).u.values
    assert np.max(np.abs(u + u[::-1])) <= 1e-8
