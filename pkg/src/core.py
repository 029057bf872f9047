"""
Domain geometry, boundary data and norms shared by every solver
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from errors import ConfigError, IncompatibleBoundaryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [a, b] with n nodes, endpoints included"""
    a: float = -1.0
    b: float = 1.0
    n: int = 401

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ConfigError(f"grid needs n >= 3 nodes, got {self.n}")
        if not self.a < self.b:
            raise ConfigError(f"grid needs a < b, got [{self.a}, {self.b}]")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        """Node coordinates; the last node is exactly b"""
        return np.linspace(self.a, self.b, self.n)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights"""
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


@dataclass(frozen=True)
class BoundaryPair:
    """Dirichlet data u(-1) = alpha, u(1) = beta"""
    alpha: float
    beta: float

    def __post_init__(self):
        # user input, compared exactly
        if self.beta != -self.alpha:
            raise IncompatibleBoundaryError(
                f"beta must equal -alpha for a matched layer, got alpha={self.alpha}, beta={self.beta}"
            )


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a Grid (solution snapshots, eigenfunctions, residuals)"""
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.n,):
            raise ValueError(f"field has {values.shape} samples, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite samples")
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)

    def __add__(self, other: 'Field') -> 'Field':
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: 'Field') -> 'Field':
        return Field(self.grid, self.values - other.values)

    def scaled(self, c: float) -> 'Field':
        return Field(self.grid, c * self.values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def make_grid(a: float, b: float, n: int) -> Grid:
    """
    Build a uniform grid

    Args:
        a: Left endpoint
        b: Right endpoint
        n: Node count including both endpoints

    Returns:
        Grid: dx = (b - a) / (n - 1)

    Raises:
        ConfigError: non-integer n, n < 3 or a >= b
    """
    if isinstance(n, bool) or not float(n).is_integer():
        raise ConfigError(f"grid node count must be an integer, got {n!r}")
    return Grid(float(a), float(b), int(n))


def validate_bc(alpha: float, beta: float) -> BoundaryPair:
    """
    Validate boundary data against the matching compatibility alpha = -beta

    Raises:
        IncompatibleBoundaryError: when beta != -alpha
    """
    return BoundaryPair(float(alpha), float(beta))


def integrate(f: Field) -> float:
    """Trapezoid estimate of the integral of f over its grid"""
    return float(trapezoid(f.values, dx=f.grid.dx))


def l2_norm(f: Field) -> float:
    """sqrt(int f^2 dx) by the trapezoid rule"""
    return float(np.sqrt(trapezoid(f.values * f.values, dx=f.grid.dx)))
