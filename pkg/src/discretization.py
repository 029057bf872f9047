"""
Finite-difference Newton solver for the stationary equation eps*u_xx - u*u_x = 0

Second-order centered stencils on a uniform grid; Dirichlet rows are kept as algebraic
identities so every Jacobian is tridiagonal and is solved by banded elimination.
"""
import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from core import BoundaryPair, Field
from errors import NoConvergenceError, SingularJacobianError

logger = logging.getLogger(__name__)

DEFAULT_MIN_NODES = 401
DEFAULT_NODES_PER_EPS = 16


def resolution_rule(eps: float, min_nodes: int = DEFAULT_MIN_NODES,
                    nodes_per_eps: int = DEFAULT_NODES_PER_EPS) -> int:
    """n = max(min_nodes, ceil(nodes_per_eps / eps) + 1); ~8 nodes across the 2*eps layer"""
    return max(int(min_nodes), int(math.ceil(nodes_per_eps / eps)) + 1)


@dataclass(frozen=True, eq=False)
class TriDiag:
    """
    Tridiagonal matrix stored by diagonals

    Attributes:
        lower: Subdiagonal, lower[i - 1] = M[i, i - 1] (length n - 1)
        diag: Main diagonal (length n)
        upper: Superdiagonal, upper[i] = M[i, i + 1] (length n - 1)
    """
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1:
            raise ValueError(
                f"inconsistent diagonals: {len(self.lower)}, {n}, {len(self.upper)}"
            )
        for band in (self.lower, self.diag, self.upper):
            if not np.all(np.isfinite(band)):
                raise SingularJacobianError("tridiagonal matrix has non-finite entries")

    @property
    def n(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def to_banded(self) -> np.ndarray:
        """(3, n) layout used by scipy.linalg.solve_banded with (l, u) = (1, 1)"""
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.upper
        ab[1, :] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.lower, self.upper))

    def norm_inf(self) -> float:
        """Maximum absolute row sum"""
        rows = np.abs(self.diag).copy()
        rows[:-1] += np.abs(self.upper)
        rows[1:] += np.abs(self.lower)
        return float(np.max(rows))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """
        Direct banded elimination

        Raises:
            SingularJacobianError: when the matrix is singular or the solution is not finite
        """
        try:
            x = scipy.linalg.solve_banded((1, 1), self.to_banded(), rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise SingularJacobianError(f"tridiagonal solve failed: {e}") from e
        if not np.all(np.isfinite(x)):
            raise SingularJacobianError("tridiagonal solve produced non-finite values")
        return x


@dataclass(frozen=True, eq=False)
class SteadyResult:
    """Converged Newton solve of the stationary problem (iterations = updates applied)"""
    u: Field
    iterations: int
    residual_history: np.ndarray


def burgers_operator(values: np.ndarray, dx: float, eps: float) -> np.ndarray:
    """eps*u_xx - u*u_x at interior nodes by centered differences; zero on the boundary"""
    out = np.zeros_like(values)
    um, uc, up = values[:-2], values[1:-1], values[2:]
    out[1:-1] = eps * (um - 2.0 * uc + up) / dx ** 2 - uc * (up - um) / (2.0 * dx)
    return out


def burgers_jacobian(values: np.ndarray, dx: float, eps: float) -> TriDiag:
    """Jacobian of burgers_operator; boundary rows are zero"""
    n = len(values)
    lower = np.zeros(n - 1)
    diag = np.zeros(n)
    upper = np.zeros(n - 1)
    uc = values[1:-1]
    lower[:-1] = eps / dx ** 2 + uc / (2.0 * dx)
    diag[1:-1] = -2.0 * eps / dx ** 2 - (values[2:] - values[:-2]) / (2.0 * dx)
    upper[1:] = eps / dx ** 2 - uc / (2.0 * dx)
    return TriDiag(lower, diag, upper)


def steady_residual(u: Field, eps: float, bc: BoundaryPair) -> Field:
    """
    Discrete stationary residual

    Interior rows hold eps*(u[i-1] - 2u[i] + u[i+1])/dx^2 - u[i]*(u[i+1] - u[i-1])/(2dx);
    boundary rows hold u[0] - alpha and u[n-1] - beta.
    """
    r = burgers_operator(u.values, u.grid.dx, eps)
    r[0] = u.values[0] - bc.alpha
    r[-1] = u.values[-1] - bc.beta
    return Field(u.grid, r)


def steady_jacobian(u: Field, eps: float) -> TriDiag:
    """Jacobian of steady_residual with identity boundary rows"""
    jac = burgers_jacobian(u.values, u.grid.dx, eps)
    diag = jac.diag.copy()
    diag[0] = diag[-1] = 1.0
    return TriDiag(jac.lower, diag, jac.upper)


def newton_solve_steady(eps: float, bc: BoundaryPair, u0: Field, tol: float = 1e-10,
                        max_iter: int = 100, max_halvings: int = 10) -> SteadyResult:
    """
    Newton iteration on the discrete stationary problem

    Full steps by default; when a step increases the max-norm residual the step is
    halved up to max_halvings times.

    Args:
        eps: Viscosity
        bc: Dirichlet data
        u0: Initial guess, projected onto the boundary rows
        tol: Max-norm residual target
        max_iter: Newton step limit
        max_halvings: Step halvings allowed per iteration

    Returns:
        SteadyResult: converged state with the residual history. `iterations` counts
            Newton updates applied, so a guess that already meets tol reports 0
            and residual_history holds the single initial residual.

    Raises:
        NoConvergenceError: max_iter reached or no halving reduced the residual
        SingularJacobianError: degenerate linearization
    """
    grid = u0.grid
    values = np.array(u0.values)
    values[0], values[-1] = bc.alpha, bc.beta
    u = Field(grid, values)

    r = steady_residual(u, eps, bc).values
    rnorm = float(np.max(np.abs(r)))
    history: List[float] = [rnorm]
    logger.debug(f"Newton start: n={grid.n}, eps={eps}, residual {rnorm:.3e}")

    iterations = 0
    while rnorm > tol:
        if iterations >= max_iter:
            raise NoConvergenceError(iterations, rnorm)

        delta = steady_jacobian(u, eps).solve(-r)
        step = 1.0
        for _ in range(max_halvings + 1):
            trial = Field(grid, u.values + step * delta)
            r_trial = steady_residual(trial, eps, bc).values
            r_trial_norm = float(np.max(np.abs(r_trial)))
            if r_trial_norm < rnorm:
                break
            step *= 0.5
        else:
            raise NoConvergenceError(
                iterations, rnorm,
                f"residual stalled at {rnorm:.3e} after {iterations} iterations "
                f"(layer under-resolved or tol below roundoff)"
            )

        if step < 1.0:
            logger.debug(f"  damped step {step:g} at iteration {iterations + 1}")
        u, r, rnorm = trial, r_trial, r_trial_norm
        iterations += 1
        history.append(rnorm)
        logger.debug(f"  iteration {iterations}: residual {rnorm:.3e}")

    logger.info(f"✓ Steady state converged: eps={eps}, n={grid.n}, "
                f"{iterations} iterations, residual {rnorm:.3e}")
    return SteadyResult(u, iterations, np.array(history))
