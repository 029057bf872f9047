"""
Linearized stability spectrum of the shock-layer equilibrium

The perturbation problem eps*Phi'' - (U*Phi)' + lam*Phi = 0, Phi(+-1) = 0 is rewritten
through phi = Phi / p, p(x) = exp(eps^-1 int_0^x U ds), as -(eps/p)(p phi')' = lam*phi.
A diagonal similarity with sqrt(p) turns the discretization into a symmetric
tridiagonal matrix whose smallest eigenvalues are extracted by bisection on Sturm
sequences.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress

from asymptotics import CompositeProfile
from core import Field, Grid, l2_norm
from discretization import TriDiag, resolution_rule
from errors import (ConfigError, IterationLimitError, NumericalError, PrecisionFloorError,
                    ResolutionError, WeightUnderflowError)

logger = logging.getLogger(__name__)

PRECISION_FLOOR_EPS = 0.05
WEIGHT_UNDERFLOW = 1e-280
EIGEN_RESIDUAL_RTOL = 1e-8
MIN_SWEEP_ROWS = 3


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """
    Smallest eigenvalues of the linearized Dirichlet problem

    Attributes:
        eigenvalues: Ascending eigenvalues lam_1 < lam_2 < ...
        eigenfunctions: Phi recovered on the full grid, unit L2 norm, Phi(+-1) = 0
        modes: Eigenvectors of the symmetrized problem on the full grid, unit L2 norm
        weight: Symmetrization weight p
        eps: Viscosity
    """
    eigenvalues: np.ndarray
    eigenfunctions: List[Field]
    modes: List[Field]
    weight: Field
    eps: float

    @property
    def principal(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class SweepRow:
    eps: float
    n: int
    eigenvalues: Tuple[float, ...]
    status: str = 'ok'


@dataclass(frozen=True)
class SweepFit:
    """Least-squares line ln(lam_1) = intercept + slope / eps"""
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class SweepTable:
    rows: List[SweepRow]
    fit: Optional[SweepFit]
    note: str = ''

    def successful(self) -> List[SweepRow]:
        return [row for row in self.rows if row.status == 'ok']


def _check_underflow(log_p: np.ndarray, eps: float) -> None:
    if float(np.min(log_p)) < math.log(WEIGHT_UNDERFLOW):
        raise WeightUnderflowError(
            f"symmetrization weight underflows (min p < {WEIGHT_UNDERFLOW:g}) at eps={eps}; "
            f"eps is too small for double-precision symmetrization"
        )


def symmetrization_weight(p: CompositeProfile, g: Grid) -> Field:
    """
    p(x) = exp(eps^-1 int_0^x U ds) = [cosh(alpha k / 2) / cosh(theta(x))]^2

    Raises:
        WeightUnderflowError: when min p < 1e-280
    """
    log_p = p.log_weight(g.x)
    _check_underflow(log_p, p.eps)
    return Field(g, np.exp(log_p))


def weight_from_field(u: Field, eps: float) -> Field:
    """
    Symmetrization weight of a sampled equilibrium

    The exponent eps^-1 int_0^x u ds is integrated by cumulative trapezoid and
    referenced to x = 0 by linear interpolation.
    """
    x = u.grid.x
    exponent = cumulative_trapezoid(u.values, x, initial=0.0) / eps
    log_p = exponent - float(np.interp(0.0, x, exponent))
    _check_underflow(log_p, eps)
    return Field(u.grid, np.exp(log_p))


def turning_point_weight(eps: float, g: Grid) -> Field:
    """p(x) = exp(-x^2 / (2 eps)) for the model problem eps*phi'' - x*phi' + lam*phi = 0"""
    log_p = -g.x ** 2 / (2.0 * eps)
    _check_underflow(log_p, eps)
    return Field(g, np.exp(log_p))


def build_symmetric_operator(p_weight: Field, eps: float) -> TriDiag:
    """
    Symmetrized interior operator of -(eps/p)(p phi')'

    Half-node weights are geometric means of adjacent node weights, so
    A[i, i+-1] = -(eps/dx^2) p[i+-1/2] / sqrt(p[i] p[i+-1]) and
    A[i, i] = (eps/dx^2)(p[i-1/2] + p[i+1/2]) / p[i], both evaluated through weight
    ratios.

    Raises:
        ConfigError: when a weight is not positive
    """
    p = p_weight.values
    if np.any(p <= 0):
        raise ConfigError("symmetrization weights must be positive")
    scale = eps / p_weight.grid.dx ** 2

    # p[i+1/2] / sqrt(p[i] p[i+1]) is 1 for geometric half weights
    off = np.full(p.size - 3, -scale)

    ratio = np.sqrt(p[1:] / p[:-1])      # sqrt(p[i+1] / p[i])
    left = 1.0 / ratio[:-1]              # p[i-1/2] / p[i] = sqrt(p[i-1] / p[i])
    right = ratio[1:]                    # p[i+1/2] / p[i] = sqrt(p[i+1] / p[i])
    diag = scale * (left + right)
    return TriDiag(off, diag, off)


def eigen_smallest(A: TriDiag, m: int, vectors: bool = False
                   ) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    m smallest eigenvalues of a symmetric tridiagonal matrix

    Bisection on Sturm sequences (LAPACK stebz) with inverse iteration for the vectors.

    Args:
        A: Symmetric tridiagonal matrix
        m: Number of eigenvalues, 1 <= m <= A.n
        vectors: Also return eigenvectors as columns

    Raises:
        IterationLimitError: when bisection or inverse iteration fails
    """
    if not A.is_symmetric():
        raise ConfigError("eigen_smallest needs a symmetric matrix")
    if not 1 <= m <= A.n:
        raise ConfigError(f"requested {m} eigenvalues of a {A.n}x{A.n} matrix")

    if A.n == 1:
        w = np.array(A.diag, dtype=np.float64)
        return (w, np.ones((1, 1))) if vectors else w

    try:
        result = scipy.linalg.eigh_tridiagonal(
            A.diag, A.upper, eigvals_only=not vectors,
            select='i', select_range=(0, m - 1), lapack_driver='stebz'
        )
    except (np.linalg.LinAlgError, ValueError) as e:
        raise IterationLimitError(f"tridiagonal eigensolver failed: {e}") from e

    if not vectors:
        return np.sort(result)

    w, v = result
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    bound = EIGEN_RESIDUAL_RTOL * max(A.norm_inf(), np.finfo(float).tiny)
    for j in range(len(w)):
        res = np.linalg.norm(A.matvec(v[:, j]) - w[j] * v[:, j]) / np.linalg.norm(v[:, j])
        if res > bound:
            raise IterationLimitError(
                f"eigenpair {j + 1} residual {res:.3e} exceeds {bound:.3e}"
            )
    return w, v


def dense_eigenvalues(A: TriDiag, m: int) -> np.ndarray:
    """Brute-force check: m smallest eigenvalues of the dense symmetric matrix"""
    return scipy.linalg.eigvalsh(A.to_dense())[:m]


def assemble_flux_operator(p_weight: Field, eps: float) -> np.ndarray:
    """
    Dense nonsymmetric interior matrix of Phi -> -(eps*Phi'' - (U*Phi)')

    Written in flux form eps*(p (Phi/p)')' with the same half-node weights as the
    symmetric assembly, so the two matrices are similar.
    """
    p = p_weight.values
    scale = eps / p_weight.grid.dx ** 2
    half = np.sqrt(p[:-1] * p[1:])       # half[i] = p[i+1/2]
    diag = scale * (half[:-1] + half[1:]) / p[1:-1]
    lower = -scale * half[1:-1] / p[1:-2]
    upper = -scale * half[1:-1] / p[2:-1]
    return np.diag(diag) + np.diag(lower, -1) + np.diag(upper, 1)


def dense_spectrum(matrix: np.ndarray, m: int) -> np.ndarray:
    """m eigenvalues of smallest real part of a dense (possibly nonsymmetric) matrix"""
    w = scipy.linalg.eigvals(matrix)
    return np.sort(w.real)[:m]


def _orient(values: np.ndarray) -> np.ndarray:
    """Flip sign so the first significant interior extremum is positive"""
    peak = np.max(np.abs(values))
    if peak == 0:
        return values
    significant = np.abs(values) >= 1e-8 * peak
    for i in range(1, len(values) - 1):
        if significant[i] and (values[i] - values[i - 1]) * (values[i + 1] - values[i]) <= 0:
            return values if values[i] > 0 else -values
    return values if values[np.argmax(np.abs(values))] > 0 else -values


def _normalized(grid: Grid, interior: np.ndarray) -> Field:
    values = np.zeros(grid.n)
    values[1:-1] = interior
    values = _orient(values)
    f = Field(grid, values)
    return f.scaled(1.0 / l2_norm(f))


def _check_eps(eps: float, grid: Grid, allow_below_floor: bool) -> None:
    if not eps > 0:
        raise ConfigError(f"viscosity eps must be positive, got {eps}")
    if eps < PRECISION_FLOOR_EPS and not allow_below_floor:
        raise PrecisionFloorError(
            f"eps={eps} is below the precision floor {PRECISION_FLOOR_EPS}: the principal "
            f"eigenvalue falls under eigenvalue roundoff (override with allow_below_floor)"
        )
    required = math.ceil(16.0 / eps) + 1
    if grid.n < required:
        raise ResolutionError(f"n={grid.n} does not resolve the layer at eps={eps}; need n >= {required}")


def solve_weighted(weight: Field, eps: float, m: int) -> SpectrumResult:
    """Eigenpairs of the symmetrized operator for a given weight"""
    grid = weight.grid
    A = build_symmetric_operator(weight, eps)
    w, v = eigen_smallest(A, m, vectors=True)

    sqrt_p = np.sqrt(weight.values[1:-1])
    modes = [_normalized(grid, v[:, j]) for j in range(len(w))]
    # Phi = p * phi = sqrt(p) * psi
    eigenfunctions = [_normalized(grid, sqrt_p * v[:, j]) for j in range(len(w))]
    return SpectrumResult(np.asarray(w), eigenfunctions, modes, weight, eps)


def linearized_spectrum(p: CompositeProfile, g: Grid, m: int,
                        allow_below_floor: bool = False) -> SpectrumResult:
    """
    Spectrum of eps*Phi'' - (U*Phi)' + lam*Phi = 0 around the composite profile

    Raises:
        PrecisionFloorError: eps below 0.05 without override
        ResolutionError: n < ceil(16/eps) + 1
        WeightUnderflowError: propagated from the weight
    """
    _check_eps(p.eps, g, allow_below_floor)
    result = solve_weighted(symmetrization_weight(p, g), p.eps, m)
    logger.info(f"Spectrum (composite): eps={p.eps}, n={g.n}, lam_1={result.principal:.6e}")
    return result


def linearized_spectrum_from_state(u: Field, eps: float, m: int,
                                   allow_below_floor: bool = False) -> SpectrumResult:
    """Same eigenproblem with U taken from a sampled equilibrium (e.g. the Newton steady state)"""
    _check_eps(eps, u.grid, allow_below_floor)
    result = solve_weighted(weight_from_field(u, eps), eps, m)
    logger.info(f"Spectrum (steady): eps={eps}, n={u.grid.n}, lam_1={result.principal:.6e}")
    return result


def turning_point_model(eps: float, g: Grid, m: int, allow_below_floor: bool = False) -> np.ndarray:
    """Eigenvalues of eps*phi'' - x*phi' + lam*phi = 0, phi(+-1) = 0"""
    _check_eps(eps, g, allow_below_floor)
    A = build_symmetric_operator(turning_point_weight(eps, g), eps)
    return eigen_smallest(A, m)


def fit_exponential_smallness(eps_values: Sequence[float], lam1: Sequence[float]) -> SweepFit:
    """Fit ln(lam_1) against 1/eps"""
    fit = linregress(1.0 / np.asarray(eps_values), np.log(np.asarray(lam1)))
    return SweepFit(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2))


def _sweep(eps_list: Sequence[float], row_fn: Callable[[float], SweepRow], jobs: int) -> SweepTable:
    def guarded(eps: float) -> SweepRow:
        try:
            if not 0.05 <= eps <= 0.5:
                raise ConfigError(f"sweep eps must lie in [0.05, 0.5], got {eps}")
            return row_fn(eps)
        except (NumericalError, ConfigError) as e:
            logger.warning(f"Sweep row eps={eps} failed: {e}")
            return SweepRow(eps, 0, (), status=f"error: {e}")

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(guarded, eps_list))
    else:
        rows = [guarded(eps) for eps in eps_list]

    ok = [row for row in rows if row.status == 'ok']
    nonpositive = [row.eps for row in ok if row.eigenvalues[0] <= 0]
    if nonpositive:
        logger.warning(f"lam_1 <= 0 at eps={nonpositive}; those rows are left out of the log fit")
        ok = [row for row in ok if row.eigenvalues[0] > 0]
    if len(ok) < MIN_SWEEP_ROWS:
        return SweepTable(rows, None, note=f"NotEnoughPoints: fit needs at least {MIN_SWEEP_ROWS} rows "
                                          f"with lam_1 > 0, got {len(ok)}")
    fit = fit_exponential_smallness([row.eps for row in ok], [row.eigenvalues[0] for row in ok])
    logger.info(f"Sweep fit: ln(lam_1) = {fit.intercept:.4f} + {fit.slope:.4f}/eps, r^2={fit.r_squared:.4f}")
    return SweepTable(rows, fit)


def metastability_sweep(alpha: float, eps_list: Sequence[float],
                        g_rule: Callable[[float], int] = resolution_rule, m: int = 2,
                        k: float = 0.0, jobs: int = 1,
                        allow_below_floor: bool = False) -> SweepTable:
    """
    Principal eigenvalues over a range of eps; ln(lam_1) against 1/eps should be a
    line of negative slope

    Rows are independent and may run concurrently; the table keeps the input order.
    """
    def row(eps: float) -> SweepRow:
        n = g_rule(eps)
        result = linearized_spectrum(CompositeProfile(alpha, k, eps), Grid(-1.0, 1.0, n), m,
                                     allow_below_floor=allow_below_floor)
        return SweepRow(eps, n, tuple(float(v) for v in result.eigenvalues))

    return _sweep(eps_list, row, jobs)


def turning_point_sweep(eps_list: Sequence[float],
                        g_rule: Callable[[float], int] = resolution_rule, m: int = 2,
                        jobs: int = 1) -> SweepTable:
    """metastability_sweep for the model turning-point problem"""
    def row(eps: float) -> SweepRow:
        n = g_rule(eps)
        w = turning_point_model(eps, Grid(-1.0, 1.0, n), m)
        return SweepRow(eps, n, tuple(float(v) for v in w))

    return _sweep(eps_list, row, jobs)
