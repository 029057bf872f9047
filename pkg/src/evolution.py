"""
Time-dependent viscous Burgers solver and L2 decay measurements

u_t + u*u_x = eps*u_xx is advanced by the implicit trapezoidal rule with a Newton solve
per step, reusing the stationary operator and Jacobian from the discretization module.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.stats import linregress

from asymptotics import CompositeProfile
from core import BoundaryPair, Field, Grid, integrate, l2_norm
from discretization import (TriDiag, burgers_jacobian, burgers_operator, newton_solve_steady,
                            resolution_rule)
from errors import (ConfigError, EvolutionError, NotEnoughPointsError, NumericalError,
                    PerturbationError, StepNoConvergenceError)
from spectrum import linearized_spectrum_from_state

logger = logging.getLogger(__name__)

STEP_TOL = 1e-11
FIT_WINDOW = (0.2, 0.9)
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Sampled run: deviations ||u(t) - reference||_2 at ascending times

    Attributes:
        times: Strictly ascending sample times
        deviations: L2 deviation from the reference at each sample
        snapshots: Solution at each sample (empty when not kept)
        reference_norm: ||reference||_2, used for the fit floor
    """
    times: np.ndarray
    deviations: np.ndarray
    snapshots: List[Field] = field(default_factory=list)
    reference_norm: float = 1.0


@dataclass(frozen=True)
class DecayFit:
    lambda_est: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]


@dataclass(frozen=True)
class BoundednessResult:
    """Every snapshot satisfies int u^2 dx < 8 alpha^2 + 2M"""
    passed: bool
    max_energy: float
    bound: float
    M: float


def perturbed_initial(base: Union[CompositeProfile, Field], phi: Field, nu: float,
                      bc: Optional[BoundaryPair] = None) -> Field:
    """
    u0 = U + nu * Phi on the grid of phi

    Args:
        base: Composite profile (endpoints pinned to (alpha, -alpha)) or a sampled equilibrium
        phi: Perturbation shape with Phi(+-1) = 0
        nu: Amplitude, |nu| <= 0.1 |alpha| when alpha != 0
        bc: Boundary data used to size the linear regime for Field bases

    Raises:
        PerturbationError: endpoint condition or linear-regime bound violated
    """
    if isinstance(base, CompositeProfile):
        alpha = base.alpha
        u = base.sample(phi.grid).values.copy()
        u[0], u[-1] = alpha, -alpha
    else:
        alpha = bc.alpha if bc is not None else float(base.values[0])
        u = np.array(base.values)

    peak = phi.max_abs()
    if abs(phi.values[0]) > 1e-12 * peak or abs(phi.values[-1]) > 1e-12 * peak:
        raise PerturbationError("perturbation must vanish at x = -1 and x = 1 (Phi(+-1) = 0)")
    if alpha != 0 and abs(nu) > 0.1 * abs(alpha):
        raise PerturbationError(f"|nu|={abs(nu)} leaves the linear regime (limit {0.1 * abs(alpha)})")

    left, right = u[0], u[-1]
    u = u + nu * phi.values
    u[0], u[-1] = left, right
    return Field(phi.grid, u)


def _step_system(v: np.ndarray, u: np.ndarray, f_u: np.ndarray, half_dt: float,
                 dx: float, eps: float, bc: BoundaryPair) -> np.ndarray:
    g = v - u - half_dt * (burgers_operator(v, dx, eps) + f_u)
    g[0] = v[0] - bc.alpha
    g[-1] = v[-1] - bc.beta
    return g


def step_implicit(u: Field, dt: float, eps: float, bc: BoundaryPair,
                  tol: float = STEP_TOL, max_iter: int = 25) -> Field:
    """
    One implicit trapezoidal step

    Solves v - u - (dt/2)(F(v) + F(u)) = 0 on interior rows, v = bc on boundary rows,
    with F(u) = eps*u_xx - u*u_x, by Newton iteration starting from v = u.

    Raises:
        StepNoConvergenceError: Newton did not reach tol within max_iter
        SingularJacobianError: propagated from the banded solve
    """
    if not dt > 0:
        raise ConfigError(f"time step must be positive, got {dt}")
    dx = u.grid.dx
    half_dt = 0.5 * dt
    f_u = burgers_operator(u.values, dx, eps)

    v = np.array(u.values)
    g = _step_system(v, u.values, f_u, half_dt, dx, eps, bc)
    gnorm = float(np.max(np.abs(g)))
    for _ in range(max_iter):
        if gnorm <= tol:
            return Field(u.grid, v)
        jac = burgers_jacobian(v, dx, eps)
        diag = 1.0 - half_dt * jac.diag
        diag[0] = diag[-1] = 1.0
        system = TriDiag(-half_dt * jac.lower, diag, -half_dt * jac.upper)
        v = v + system.solve(-g)
        g = _step_system(v, u.values, f_u, half_dt, dx, eps, bc)
        gnorm = float(np.max(np.abs(g)))
    if gnorm <= tol:
        return Field(u.grid, v)
    raise StepNoConvergenceError(
        f"implicit step did not converge (residual {gnorm:.3e}); try a smaller dt than {dt}"
    )


def equilibrium_for(u0: Field, eps: float, bc: BoundaryPair) -> Field:
    """
    Newton steady state for bc on the grid of u0

    Newton starts from u0 and falls back to the k = 0 composite when that start diverges.
    """
    try:
        return newton_solve_steady(eps, bc, u0).u
    except NumericalError as e:
        logger.debug(f"Newton from the initial state failed ({e}); restarting from the composite")
    guess = CompositeProfile(float(bc.alpha), 0.0, float(eps)).sample(u0.grid)
    return newton_solve_steady(eps, bc, guess).u


def evolve(u0: Field, t_end: float, dt: float, eps: float, bc: BoundaryPair,
           sample_every: int = 10, reference: Optional[Field] = None,
           keep_snapshots: bool = True, tol: float = STEP_TOL) -> Trajectory:
    """
    Integrate to t_end, sampling the L2 deviation from the reference

    Args:
        u0: Initial state satisfying the boundary data
        t_end: Final time (rounded to a whole number of steps)
        dt: Time step
        eps: Viscosity
        bc: Dirichlet data
        sample_every: Steps between samples; the final step is always sampled
        reference: Equilibrium the deviation is measured against (defaults to the
            steady state for bc, see equilibrium_for)
        keep_snapshots: Store the solution at each sample

    Raises:
        EvolutionError: a step failed; `partial` holds the trajectory so far
    """
    if not t_end > 0 or not dt > 0:
        raise ConfigError(f"t_end and dt must be positive, got t_end={t_end}, dt={dt}")
    if sample_every < 1:
        raise ConfigError(f"sample_every must be >= 1, got {sample_every}")
    if reference is None:
        reference = equilibrium_for(u0, eps, bc)
    ref_norm = l2_norm(reference)
    n_steps = max(1, int(round(t_end / dt)))

    times: List[float] = [0.0]
    deviations: List[float] = [l2_norm(u0 - reference)]
    snapshots: List[Field] = [u0] if keep_snapshots else []

    logger.info(f"Evolving: eps={eps}, n={u0.grid.n}, dt={dt}, steps={n_steps}, "
                f"initial deviation {deviations[0]:.3e}")
    u = u0
    for step in range(1, n_steps + 1):
        try:
            u = step_implicit(u, dt, eps, bc, tol=tol)
        except NumericalError as e:
            partial = Trajectory(np.array(times), np.array(deviations), snapshots, ref_norm)
            raise EvolutionError(f"step {step} (t={step * dt:.4g}) failed: {e}", partial) from e
        if step % sample_every == 0 or step == n_steps:
            times.append(step * dt)
            deviations.append(l2_norm(u - reference))
            if keep_snapshots:
                snapshots.append(u)

    logger.info(f"✓ Evolution finished at t={times[-1]:.4g}: deviation {deviations[-1]:.3e}")
    return Trajectory(np.array(times), np.array(deviations), snapshots, ref_norm)


def fit_decay(tr: Trajectory, window: Tuple[float, float] = FIT_WINDOW) -> DecayFit:
    """
    Least-squares line through (t, ln deviation) over window * t_end

    Samples at or below 1e3 * machine epsilon * ||U||_2 are excluded.

    Raises:
        NotEnoughPointsError: fewer than 10 usable samples in the window
    """
    t_end = float(tr.times[-1])
    t_lo, t_hi = window[0] * t_end, window[1] * t_end
    floor = 1e3 * np.finfo(float).eps * tr.reference_norm
    mask = (tr.times >= t_lo) & (tr.times <= t_hi) & (tr.deviations > floor)
    if int(np.count_nonzero(mask)) < MIN_FIT_SAMPLES:
        raise NotEnoughPointsError(
            f"only {int(np.count_nonzero(mask))} usable samples in [{t_lo:.4g}, {t_hi:.4g}]; "
            f"need {MIN_FIT_SAMPLES}"
        )
    fit = linregress(tr.times[mask], np.log(tr.deviations[mask]))
    r_squared = float(min(1.0, max(0.0, fit.rvalue ** 2)))
    return DecayFit(-float(fit.slope), float(fit.intercept), r_squared, (t_lo, t_hi))


def instantiate_bound_constant(phi: Field, nu: float) -> float:
    """M = 4 nu^2 (sup |Phi|)^2, so that |nu * Phi| <= sqrt(M) / 2 everywhere"""
    return 4.0 * nu ** 2 * phi.max_abs() ** 2


def boundedness_check(tr: Trajectory, p: CompositeProfile, nu: float,
                      M: Optional[float] = None, phi: Optional[Field] = None) -> BoundednessResult:
    """
    Check int u^2 dx < 8 alpha^2 + 2M on every snapshot

    M defaults to instantiate_bound_constant(phi, nu).
    """
    if M is None:
        if phi is None:
            raise ConfigError("boundedness_check needs either M or the perturbation phi")
        M = instantiate_bound_constant(phi, nu)
    if not tr.snapshots:
        raise ConfigError("boundedness_check needs a trajectory with snapshots")
    bound = 8.0 * p.alpha ** 2 + 2.0 * M
    energies = [integrate(Field(s.grid, s.values ** 2)) for s in tr.snapshots]
    max_energy = float(max(energies))
    return BoundednessResult(bool(all(e < bound for e in energies)), max_energy, bound, M)


@dataclass(frozen=True, eq=False)
class DecayExperiment:
    """Everything produced by one perturb-and-relax run"""
    eps: float
    nu: float
    dt: float
    t_end: float
    lambda_1: float
    steady: Field
    phi: Field
    trajectory: Trajectory
    fit: Optional[DecayFit]
    boundedness: BoundednessResult
    reference: Field


def run_decay_experiment(alpha: float, eps: float, nu: float = 1e-3, n: Optional[int] = None,
                         dt: float = 0.01, t_end: Optional[float] = None, sample_every: int = 10,
                         reference: str = 'steady', k: float = 0.0,
                         allow_below_floor: bool = False,
                         step_tol: float = STEP_TOL) -> DecayExperiment:
    """
    Perturb the equilibrium along its principal mode and measure the L2 relaxation rate

    The Newton steady state is both the perturbation base and, by default, the deviation
    reference; lam_1 comes from the weight of that steady state. t_end defaults to 3 / lam_1.

    Args:
        alpha: Shock amplitude (bc = (alpha, -alpha))
        eps: Viscosity
        nu: Perturbation amplitude
        n: Grid nodes (resolution_rule when None)
        dt: Time step
        t_end: Final time, 3 / lam_1 when None
        sample_every: Steps between samples
        reference: 'steady' or 'composite'
        k: Layer shift of the composite used as Newton guess

    Raises:
        ConfigError: unknown reference
        NumericalError: any solver failure along the pipeline
    """
    if reference not in ('steady', 'composite'):
        raise ConfigError(f"reference must be 'steady' or 'composite', got {reference!r}")
    bc = BoundaryPair(float(alpha), -float(alpha))
    grid = Grid(-1.0, 1.0, n if n is not None else resolution_rule(eps))
    profile = CompositeProfile(float(alpha), float(k), float(eps))

    steady = newton_solve_steady(eps, bc, profile.sample(grid)).u
    spec = linearized_spectrum_from_state(steady, eps, 1, allow_below_floor=allow_below_floor)
    lam1 = spec.principal
    phi = spec.eigenfunctions[0]
    if t_end is None:
        t_end = 3.0 / lam1

    u0 = perturbed_initial(steady, phi, nu, bc)
    ref = steady if reference == 'steady' else profile.sample(grid)
    trajectory = evolve(u0, t_end, dt, eps, bc, sample_every=sample_every, reference=ref,
                        tol=step_tol)
    try:
        fit = fit_decay(trajectory)
    except NotEnoughPointsError as e:
        logger.warning(f"Decay fit skipped: {e}")
        fit = None
    bounded = boundedness_check(trajectory, profile, nu, phi=phi)

    if fit is not None:
        rel = abs(fit.lambda_est - lam1) / lam1
        logger.info(f"Decay: eps={eps}, lam_1={lam1:.6e}, fitted {fit.lambda_est:.6e} "
                    f"(rel. diff {rel:.2%}, r^2={fit.r_squared:.6f})")
    return DecayExperiment(float(eps), float(nu), float(dt), float(t_end), lam1, steady, phi,
                           trajectory, fit, bounded, ref)
