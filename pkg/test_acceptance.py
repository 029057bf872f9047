#!/usr/bin/env python3
"""
End-to-end checks of the boundary-layer study: asymptotics, steady states,
spectra and the perturb-and-relax dynamics
"""
import itertools
import sys
from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest

# Add project root and src to path
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent / 'src'))

import main
from asymptotics import (closed_form_norm_sq, composite, l2_bound_check, residual_tolerance,
                         stationary_residual)
from core import BoundaryPair, Field, Grid
from discretization import newton_solve_steady
from errors import IncompatibleBoundaryError
from evolution import evolve, perturbed_initial, run_decay_experiment
from spectrum import (assemble_flux_operator, build_symmetric_operator, dense_spectrum,
                      eigen_smallest, linearized_spectrum, metastability_sweep)

BC = BoundaryPair(1.0, -1.0)


@pytest.mark.parametrize('alpha, k, eps', list(itertools.product([0.5, 1.0, 2.0], [-1.0, 0.0, 1.0],
                                                                  [0.05, 0.1, 0.25])))
def test_composite_is_stationary(alpha, k, eps):
    p = composite(alpha, k, eps)
    r = stationary_residual(p, Grid(-1.0, 1.0, 4001))
    assert r.max_abs() <= 1e-10 * max(1.0, alpha ** 3 / eps ** 2)
    assert residual_tolerance(p) == pytest.approx(1e-10 * max(1.0, alpha ** 3 / eps ** 2))


@pytest.mark.parametrize('alpha, eps', [(1.0, 0.1), (0.5, 0.25), (2.0, 0.05)])
def test_l2_membership(alpha, eps):
    norm_sq, bound = l2_bound_check(composite(alpha, 0.0, eps), Grid(-1.0, 1.0, 4001))
    npt.assert_allclose(norm_sq, closed_form_norm_sq(alpha, eps), rtol=1e-6)
    assert norm_sq < bound == 2.0 * alpha ** 2


def test_l2_anchor():
    npt.assert_allclose(closed_form_norm_sq(1.0, 0.1), 1.60003632, atol=1e-8)


def test_boundary_compatibility_gate():
    with pytest.raises(IncompatibleBoundaryError):
        BoundaryPair(1.0, 1.0)
    assert BoundaryPair(1.0, -1.0).beta == -1.0


def test_asymptotics_newton_equivalence():
    eps, g = 0.1, Grid(-1.0, 1.0, 801)
    p = composite(1.0, 0.0, eps)
    from_composite = newton_solve_steady(eps, BC, p.sample(g))
    from_ramp = newton_solve_steady(eps, BC, Field(g, -g.x))
    assert from_composite.iterations <= 4
    assert np.max(np.abs(from_composite.u.values - p.value(g.x))) <= 5e-4
    assert np.max(np.abs(from_ramp.u.values - from_composite.u.values)) <= 1e-8


@pytest.mark.parametrize('eps', [0.5, 1.0])
def test_eigensolver_oracle(eps):
    g = Grid(-1.0, 1.0, 801)
    lam = eigen_smallest(build_symmetric_operator(Field(g, np.ones(g.n)), eps), 2)
    npt.assert_allclose(lam, eps * (np.array([1.0, 2.0]) * np.pi / 2.0) ** 2, rtol=1e-3)


@pytest.mark.parametrize('eps', [0.1, 0.25, 0.5])
def test_similarity_invariance(eps):
    result = linearized_spectrum(composite(1.0, 0.0, eps), Grid(-1.0, 1.0, 401), 4)
    dense = dense_spectrum(assemble_flux_operator(result.weight, eps), 4)
    npt.assert_allclose(dense, result.eigenvalues, rtol=1e-6)


def test_exponentially_small_principal_eigenvalue():
    table = metastability_sweep(1.0, [0.3, 0.25, 0.2, 0.15, 0.1], m=2)
    assert table.fit.slope < 0
    assert table.fit.r_squared >= 0.95
    lam2 = np.array([row.eigenvalues[1] for row in table.rows])
    assert lam2.max() / lam2.min() < 10.0


@pytest.fixture(scope='module')
def decay_runs():
    return {eps: run_decay_experiment(1.0, eps, nu=1e-3) for eps in (0.3, 0.25, 0.2)}


@pytest.mark.parametrize('eps', [0.3, 0.25, 0.2])
def test_decay_matches_principal_eigenvalue(decay_runs, eps):
    exp = decay_runs[eps]
    assert exp.t_end == pytest.approx(3.0 / exp.lambda_1, rel=1e-3)
    assert abs(exp.fit.lambda_est - exp.lambda_1) / exp.lambda_1 <= 0.10
    assert exp.trajectory.deviations[-1] <= 0.06 * exp.trajectory.deviations[0]


@pytest.mark.parametrize('eps', [0.3, 0.25, 0.2])
def test_snapshots_respect_energy_bound(decay_runs, eps):
    result = decay_runs[eps].boundedness
    assert result.passed
    assert result.max_energy < result.bound


def test_linearization_validity(decay_runs):
    exp = decay_runs[0.3]
    half = evolve(perturbed_initial(exp.steady, exp.phi, 0.5 * exp.nu, BC), exp.t_end, exp.dt,
                  exp.eps, BC, reference=exp.steady, keep_snapshots=False)
    npt.assert_allclose(2.0 * half.deviations, exp.trajectory.deviations, rtol=0.02)


@pytest.mark.parametrize('argv', [
    ['profile', '--epsilon', '0.25'],
    ['spectrum', '--epsilon', '0.1', '--m', '4'],
    ['sweep', '--epsilons', '0.3,0.2,0.1', '--m', '2', '--jobs', '2', '--format', 'json'],
])
def test_cli_outputs_are_byte_identical(tmp_path, monkeypatch, argv):
    monkeypatch.delenv('BURGERS_JOBS', raising=False)
    outputs = []
    for name in ('first', 'second'):
        out = tmp_path / name
        assert main.main(argv + ['--out', str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
