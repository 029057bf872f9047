"""
Exception types shared by the solvers and the command-line entry point
"""
from typing import Optional


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)"""


class IncompatibleBoundaryError(ValueError):
    """Boundary data without a matched expansion (beta != -alpha)"""


class PerturbationError(ValueError):
    """Perturbation violating the Dirichlet endpoint condition or the linear regime"""


class NumericalError(RuntimeError):
    """Base class for numerical failures (exit code 1)"""


class NoConvergenceError(NumericalError):
    """Newton iteration hit max_iter or could not reduce the residual"""

    def __init__(self, iterations: int, residual: float, message: Optional[str] = None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            message or f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class SingularJacobianError(NumericalError):
    """Degenerate tridiagonal linearization"""


class StepNoConvergenceError(NumericalError):
    """Implicit time step failed; a smaller dt usually helps"""


class WeightUnderflowError(NumericalError):
    """Symmetrization weight below the double-precision range"""


class PrecisionFloorError(NumericalError):
    """Epsilon below the precision floor for the principal eigenvalue"""


class ResolutionError(NumericalError):
    """Grid too coarse to resolve the shock layer"""


class IterationLimitError(NumericalError):
    """Eigensolver failed to bracket or converge"""


class NotEnoughPointsError(NumericalError):
    """Too few usable samples for a least-squares fit"""


class EvolutionError(NumericalError):
    """Time integration failed; `partial` holds the trajectory up to the failure"""

    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)
