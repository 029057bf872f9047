"""
Matched asymptotic solution of the stationary viscous Burgers equation

Outer solutions are the constants alpha (left of the layer) and -alpha (right of it);
the inner solution lives in the stretched variable s = x / eps and is a tanh profile.
The composite collapses to U(x, eps) = -alpha * tanh[(alpha / 2)(x / eps + k)].
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import expit

from core import BoundaryPair, Field, Grid, integrate
from errors import ConfigError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# |theta| beyond this saturates tanh to +-1 and sech^2 to 0
THETA_CLAMP = 350.0


def balance_exponent() -> float:
    """
    Stretching exponent gamma of the inner variable s = x / eps**gamma

    Substituting s into eps*u_xx - u*u_x = 0 gives eps**(1 - 2*gamma) u_ss against
    eps**(-gamma) u u_s; the two survive together when 1 - 2*gamma = -gamma.
    """
    # (1 - 2g) - (-g) = 0  ->  g = 1
    return 1.0 / (2.0 - 1.0)


INNER_SCALING_EXPONENT = balance_exponent()


def inner_variable(x: ArrayLike, eps: float) -> ArrayLike:
    """s = x / eps**gamma with gamma = 1"""
    return np.asarray(x, dtype=np.float64) / eps ** INNER_SCALING_EXPONENT


def _tanh(theta: ArrayLike) -> np.ndarray:
    return np.tanh(np.clip(theta, -THETA_CLAMP, THETA_CLAMP))


def _sech2(theta: ArrayLike) -> np.ndarray:
    a = np.abs(np.asarray(theta, dtype=np.float64))
    e = np.exp(-2.0 * np.minimum(a, THETA_CLAMP))
    return np.where(a > THETA_CLAMP, 0.0, 4.0 * e / (1.0 + e) ** 2)


def _log_cosh(z: ArrayLike) -> np.ndarray:
    a = np.abs(np.asarray(z, dtype=np.float64))
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


@dataclass(frozen=True)
class CompositeProfile:
    """
    Composite equilibrium U(x, eps) = -alpha * tanh(theta), theta = (alpha/2)(x/eps + k)

    Attributes:
        alpha: Shock amplitude, equal to the left boundary value
        k: Layer shift in the inner variable
        eps: Viscosity
    """
    alpha: float
    k: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError(f"viscosity eps must be positive, got {self.eps}")

    def theta(self, x: ArrayLike) -> np.ndarray:
        return 0.5 * self.alpha * (np.asarray(x, dtype=np.float64) / self.eps + self.k)

    def value(self, x: ArrayLike) -> np.ndarray:
        return -self.alpha * _tanh(self.theta(x))

    def first_derivative(self, x: ArrayLike) -> np.ndarray:
        """U' = -(alpha^2 / 2 eps) sech^2(theta)"""
        return -(self.alpha ** 2 / (2.0 * self.eps)) * _sech2(self.theta(x))

    def second_derivative(self, x: ArrayLike) -> np.ndarray:
        """U'' = (alpha^3 / 2 eps^2) sech^2(theta) tanh(theta)"""
        theta = self.theta(x)
        return (self.alpha ** 3 / (2.0 * self.eps ** 2)) * _sech2(theta) * _tanh(theta)

    def log_weight(self, x: ArrayLike) -> np.ndarray:
        """
        eps^-1 * int_0^x U ds in closed form

        int_0^x U ds = -2 eps [ln cosh(theta(x)) - ln cosh(alpha k / 2)]
        """
        return -2.0 * (_log_cosh(self.theta(x)) - _log_cosh(0.5 * self.alpha * self.k))

    def sample(self, grid: Grid) -> Field:
        return Field(grid, self.value(grid.x))


@dataclass(frozen=True)
class MatchReport:
    """Inner far-field limits against the outer solutions"""
    inner_limit_left: float
    inner_limit_right: float
    outer_left: float
    outer_right: float
    max_defect: float


def outer_solutions(bc: BoundaryPair) -> Tuple[float, float]:
    """
    Leading-order outer solutions on each side of the layer

    Away from the layer -u0 * u0_x = 0 forces a constant that takes the boundary
    value on its own side: (alpha, -alpha).
    """
    return bc.alpha, -bc.alpha


def inner_solution(alpha: float, k: float, s: ArrayLike) -> np.ndarray:
    """u0_int(s) = -alpha * tanh[(alpha / 2)(s + k)]"""
    return -alpha * _tanh(0.5 * alpha * (np.asarray(s, dtype=np.float64) + k))


def composite(alpha: float, k: float = 0.0, eps: float = 0.1) -> CompositeProfile:
    """
    Composite solution u_int + u_ext - u_match on both sides of the layer

    The matching value on each side equals the outer constant, so the sum collapses
    to the inner solution written in x.

    Raises:
        ConfigError: when eps <= 0
    """
    return CompositeProfile(float(alpha), float(k), float(eps))


def stationary_residual(p: CompositeProfile, g: Grid) -> Field:
    """r(x) = eps * U'' - U * U' from the closed-form derivatives"""
    x = g.x
    r = p.eps * p.second_derivative(x) - p.value(x) * p.first_derivative(x)
    return Field(g, r)


def residual_tolerance(p: CompositeProfile) -> float:
    """Bound every residual sample must satisfy: 1e-10 * max(1, alpha^3 / eps^2)"""
    return 1e-10 * max(1.0, abs(p.alpha) ** 3 / p.eps ** 2)


def boundary_mismatch(p: CompositeProfile) -> Tuple[float, float]:
    """
    Distance of the composite from the boundary data at x = -1 and x = +1

    Returns:
        (|U(-1) - alpha|, |U(1) + alpha|)
    """
    # 1 + tanh(t) = 2 expit(2t), 1 - tanh(t) = 2 expit(-2t)
    theta_left = float(p.theta(-1.0))
    theta_right = float(p.theta(1.0))
    delta_minus = abs(p.alpha) * 2.0 * float(expit(2.0 * theta_left))
    delta_plus = abs(p.alpha) * 2.0 * float(expit(-2.0 * theta_right))
    return delta_minus, delta_plus


def matched_boundary(p: CompositeProfile) -> BoundaryPair:
    """
    Boundary data for which the composite is an exact two-point solution

    Only antisymmetric for k = 0; other shifts raise IncompatibleBoundaryError.
    """
    return BoundaryPair(float(p.value(-1.0)), float(p.value(1.0)))


def l2_bound_check(p: CompositeProfile, g: Grid) -> Tuple[float, float]:
    """
    Trapezoid estimate of int U^2 dx against the bound 2 alpha^2

    Returns:
        (norm_sq, bound); norm_sq < bound whenever alpha != 0
    """
    u = p.sample(g)
    norm_sq = integrate(Field(g, u.values ** 2))
    bound = 2.0 * p.alpha ** 2
    return norm_sq, bound


def closed_form_norm_sq(alpha: float, eps: float) -> float:
    """alpha^2 (2 - (2/c) tanh c), c = alpha / (2 eps); valid for k = 0"""
    if alpha == 0:
        return 0.0
    c = abs(alpha) / (2.0 * eps)
    return alpha ** 2 * (2.0 - (2.0 / c) * np.tanh(c))


def matching_check(p: CompositeProfile, s_max: float) -> MatchReport:
    """
    Compare the inner far field at s = -+s_max with the outer solutions

    Raises:
        ConfigError: when s_max <= 0
    """
    if not s_max > 0:
        raise ConfigError(f"s_max must be positive, got {s_max}")
    left = float(inner_solution(p.alpha, p.k, -s_max))
    right = float(inner_solution(p.alpha, p.k, s_max))
    outer_left, outer_right = p.alpha, -p.alpha
    defect = max(abs(left - outer_left), abs(right - outer_right))
    logger.debug(f"Matching at s_max={s_max}: left {left:.17g}, right {right:.17g}, defect {defect:.3e}")
    return MatchReport(left, right, outer_left, outer_right, defect)
