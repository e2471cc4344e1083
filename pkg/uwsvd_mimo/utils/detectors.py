"""Iterative solvers for the Hermitian positive definite system ``A x = b``.

Four stationary (matrix-splitting) methods share one update,
``x_{t+1} = x_t - M^{-1} g_t`` with ``g_t = A x_t - b``, and differ only in
the preconditioner M built from ``A = D + L + L^H``:

    RI    M = I
    JI    M = D
    GS    M = D + L
    SSOR  M = (D + L) D^{-1} (D + L)^H

Triangular factors are applied by substitution, never by forming an
inverse. The fifth method is memory-1 L-BFGS with an exact step size.

Every step returns a fresh ``IterState``; ``SplitSystem`` is immutable, so
independent runs can share a system across threads.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import scipy.linalg

from .errors import (
    BreakdownError,
    ConfigError,
    DimensionError,
    NumericalError,
    SingularPreconditionerError,
)
from .numerics import as_matrix, as_vector, spectral_radius

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
UNIT_DIAGONAL_TOL = 1e-10
# Diagonal entries at or below this fraction of max(diag) make M singular.
SINGULAR_DIAG_TOL = 1e-14
# Curvature d^H A d at or below this fraction of max(diag) * ||d||^2 is a breakdown.
BREAKDOWN_TOL = 1e-14
# ||g_t|| above this multiple of ||b|| stops a run as diverged.
DIVERGENCE_RATIO = 1e12


class Method(str, Enum):
    RI = "RI"
    JI = "JI"
    GS = "GS"
    SSOR = "SSOR"
    LBFGS = "LBFGS"

    @property
    def is_stationary(self) -> bool:
        return self is not Method.LBFGS


class X0Policy(str, Enum):
    ZERO = "zero"
    MATCHED_FILTER = "matched_filter"


class ThetaMode(str, Enum):
    """How the L-BFGS initial Hessian Theta = diag(A) enters the direction.

    DIAGONAL multiplies g by diag(A) as the direction formula is written;
    INVERSE_DIAGONAL divides by it, the usual inverse-Hessian reading.
    """
    DIAGONAL = "diagonal"
    INVERSE_DIAGONAL = "inverse_diagonal"


def parse_method(value) -> Method:
    """Look up a method by name, case-insensitively."""
    if isinstance(value, Method):
        return value
    try:
        return Method(str(value).strip().upper())
    except ValueError:
        names = ", ".join(m.value for m in Method)
        raise ConfigError(f"Unknown detector method '{value}' (expected one of {names})")


def parse_x0_policy(value) -> X0Policy:
    if isinstance(value, X0Policy):
        return value
    cleaned = str(value).strip().lower().replace("-", "_")
    try:
        return X0Policy(cleaned)
    except ValueError:
        raise ConfigError(f"Unknown x0 policy '{value}' (expected zero or matched_filter)")


def parse_theta_mode(value) -> ThetaMode:
    if isinstance(value, ThetaMode):
        return value
    cleaned = str(value).strip().lower().replace("-", "_")
    try:
        return ThetaMode(cleaned)
    except ValueError:
        raise ConfigError(f"Unknown L-BFGS theta mode '{value}' (expected diagonal or inverse_diagonal)")


@dataclass(frozen=True)
class SplitSystem:
    """``A x = b`` together with the splitting ``A = D + L + L^H``.

    A is symmetrized on construction; ``d`` is the real diagonal, ``l`` the
    strict lower triangle and ``lower`` the triangle ``D + L``.
    """
    a: np.ndarray
    b: np.ndarray
    d: np.ndarray = field(init=False, repr=False)
    l: np.ndarray = field(init=False, repr=False)
    lower: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        b = as_vector(self.b, "b")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"System matrix must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionError(f"b has {b.shape[0]} entries, A is {n}x{n}")

        scale = float(np.max(np.abs(a)))
        if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL * max(scale, 1.0):
            raise NumericalError("System matrix is not Hermitian")
        a = 0.5 * (a + a.conj().T)

        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", np.real(np.diag(a)).copy())
        object.__setattr__(self, "l", np.tril(a, k=-1))
        object.__setattr__(self, "lower", np.tril(a))

    @classmethod
    def from_normal_equations(cls, h, y) -> "SplitSystem":
        """Plain zero-forcing system ``H^H H x = H^H y``."""
        h = as_matrix(h, "h")
        y = as_vector(y, "y")
        if y.shape[0] != h.shape[0]:
            raise DimensionError(f"y has {y.shape[0]} entries, h has {h.shape[0]} rows")
        return cls(a=h.conj().T @ h, b=h.conj().T @ y)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def unit_diagonal(self) -> bool:
        """True when D = I, as for a UW-SVD system."""
        return bool(np.max(np.abs(self.d - 1.0)) <= UNIT_DIAGONAL_TOL)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return self.a @ x - self.b


@dataclass(frozen=True)
class IterState:
    """Iterate ``x_t`` with its residual ``g_t = A x_t - b``.

    ``prev_x`` and ``prev_g`` hold the previous pair for the L-BFGS memory;
    both are None before the first step.
    """
    x: np.ndarray
    g: np.ndarray
    prev_x: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    t: int = 0


@dataclass(frozen=True)
class DetectorSpec:
    method: Method
    max_iters: int
    x0_policy: X0Policy = X0Policy.ZERO
    theta_mode: ThetaMode = ThetaMode.DIAGONAL

    def __post_init__(self):
        object.__setattr__(self, "method", parse_method(self.method))
        object.__setattr__(self, "x0_policy", parse_x0_policy(self.x0_policy))
        object.__setattr__(self, "theta_mode", parse_theta_mode(self.theta_mode))
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        object.__setattr__(self, "max_iters", int(self.max_iters))


@dataclass(frozen=True)
class DetectorTrajectory:
    """Iterates ``x_1 .. x_T`` of one detector run.

    Attributes:
        method: detector that produced the run
        iterates: N x T matrix, column t-1 holding x_t
        residual_norms: ||g_t|| for every stored iterate
        error_norms: ||x_t - x*|| when a reference solution was given
        diverged: True if the run was cut short
        diverged_at: 1-based iteration at which divergence was detected
    """
    method: Method
    iterates: np.ndarray
    residual_norms: np.ndarray
    error_norms: Optional[np.ndarray] = None
    diverged: bool = False
    diverged_at: Optional[int] = None

    @property
    def n_iters(self) -> int:
        return self.iterates.shape[1]

    @property
    def final(self) -> Optional[np.ndarray]:
        if self.n_iters == 0:
            return None
        return self.iterates[:, -1]


def initial_state(system: SplitSystem, policy: X0Policy = X0Policy.ZERO) -> IterState:
    """``x_0 = 0`` or the matched-filter start ``x_0 = b``."""
    policy = parse_x0_policy(policy)
    if policy is X0Policy.ZERO:
        x0 = np.zeros(system.n, dtype=np.complex128)
    else:
        x0 = system.b.copy()
    return IterState(x=x0, g=system.residual(x0))


def quadratic_objective(system: SplitSystem, x) -> float:
    """``q(x) = 1/2 x^H A x - Re(b^H x)``, minimized by the ZF solution."""
    x = np.asarray(x, dtype=np.complex128)
    return float(0.5 * np.real(np.vdot(x, system.a @ x)) - np.real(np.vdot(system.b, x)))


def _check_diagonal(system: SplitSystem, method: Method):
    if method in (Method.RI, Method.LBFGS):
        return
    threshold = SINGULAR_DIAG_TOL * max(float(np.max(np.abs(system.d))), 0.0)
    bad = np.flatnonzero(system.d <= threshold)
    if bad.size:
        raise SingularPreconditionerError(
            f"{method.value} preconditioner is singular: diagonal entry {int(bad[0])} is {system.d[bad[0]]:.3e}"
        )


def _apply_inverse(system: SplitSystem, method: Method, rhs: np.ndarray) -> np.ndarray:
    """Solve ``M u = rhs``; rhs may be a vector or a matrix of columns."""
    if method is Method.RI:
        return rhs.copy()
    d = system.d if rhs.ndim == 1 else system.d[:, None]
    if method is Method.JI:
        return rhs / d
    forward = scipy.linalg.solve_triangular(system.lower, rhs, lower=True, check_finite=False)
    if method is Method.GS:
        return forward
    # SSOR: (D+L)^{-H} D (D+L)^{-1} rhs
    return scipy.linalg.solve_triangular(system.lower, d * forward, lower=True, trans="C", check_finite=False)


def preconditioner_matrix(system: SplitSystem, method) -> np.ndarray:
    """Dense M of a stationary method. Diagnostic only; steps never form it."""
    method = parse_method(method)
    if not method.is_stationary:
        raise ConfigError(f"{method.value} has no splitting preconditioner")
    _check_diagonal(system, method)
    if method is Method.RI:
        return np.eye(system.n, dtype=np.complex128)
    if method is Method.JI:
        return np.diag(system.d).astype(np.complex128)
    if method is Method.GS:
        return system.lower.copy()
    return (system.lower / system.d) @ system.lower.conj().T


def si_step(state: IterState, system: SplitSystem, method) -> IterState:
    """One stationary iteration ``x_{t+1} = x_t - M^{-1} g_t``.

    Raises:
        ConfigError: if method is not a stationary method
        SingularPreconditionerError: if a JI, GS or SSOR diagonal entry is numerically zero
    """
    method = parse_method(method)
    if not method.is_stationary:
        raise ConfigError(f"si_step does not run {method.value}")
    _check_diagonal(system, method)

    x_next = state.x - _apply_inverse(system, method, state.g)
    return IterState(
        x=x_next,
        g=system.residual(x_next),
        prev_x=state.x,
        prev_g=state.g,
        t=state.t + 1,
    )


def lbfgs_step(state: IterState, system: SplitSystem, theta_is_identity: Optional[bool] = None,
               theta_mode=ThetaMode.DIAGONAL) -> IterState:
    """One memory-1 L-BFGS step with exact step size.

    The direction is ``d_t = -Theta g_t + s (y^H Theta g_t) / (s^H y)``
    with ``s = x_t - x_{t-1}`` and ``y = g_t - g_{t-1}``. Theta is diag(A)
    (or its inverse under ``ThetaMode.INVERSE_DIAGONAL``), and I when
    ``theta_is_identity``. Without memory (t = 0, or s^H y <= 0) the
    direction is ``-Theta g_t``. The update is ``x_{t+1} = x_t - xi d_t``
    with ``xi = Re(g_t^H d_t) / (d_t^H A d_t)``.

    Args:
        state: current iterate
        system: split system
        theta_is_identity: drop Theta; defaults to ``system.unit_diagonal``
        theta_mode: how diag(A) is applied when Theta is kept

    Raises:
        SingularPreconditionerError: if Theta is kept and a diagonal entry is numerically zero
        BreakdownError: if d_t has no curvature under A
    """
    if theta_is_identity is None:
        theta_is_identity = system.unit_diagonal
    theta_mode = parse_theta_mode(theta_mode)
    g = state.g
    if not np.any(g):
        return IterState(x=state.x, g=g, prev_x=state.prev_x, prev_g=state.prev_g, t=state.t + 1)

    if theta_is_identity:
        scaled_g = g
    else:
        _check_diagonal(system, Method.JI)
        scaled_g = g * system.d if theta_mode is ThetaMode.DIAGONAL else g / system.d

    direction = -scaled_g
    if state.t > 0 and state.prev_x is not None and state.prev_g is not None:
        s = state.x - state.prev_x
        y = g - state.prev_g
        sy = float(np.real(np.vdot(s, y)))
        if sy > 0.0:
            direction = direction + s * (np.vdot(y, scaled_g) / sy)
        else:
            logger.debug(f"L-BFGS memory dropped at t={state.t}: s^H y = {sy:.3e}")

    curvature = float(np.real(np.vdot(direction, system.a @ direction)))
    scale = float(np.max(np.abs(system.d)))
    if curvature <= BREAKDOWN_TOL * scale * float(np.real(np.vdot(direction, direction))):
        raise BreakdownError(f"L-BFGS direction has no curvature at t={state.t}: d^H A d = {curvature:.3e}")

    xi = float(np.real(np.vdot(g, direction))) / curvature
    x_next = state.x - xi * direction
    return IterState(
        x=x_next,
        g=system.residual(x_next),
        prev_x=state.x,
        prev_g=g,
        t=state.t + 1,
    )


def step(state: IterState, system: SplitSystem, method, theta_mode=ThetaMode.DIAGONAL) -> IterState:
    """Advance ``state`` by one iteration of ``method``; ``theta_mode`` only affects L-BFGS."""
    method = parse_method(method)
    if method is Method.LBFGS:
        return lbfgs_step(state, system, theta_mode=theta_mode)
    return si_step(state, system, method)


def run_detector(spec: DetectorSpec, system: SplitSystem, truth_solution=None) -> DetectorTrajectory:
    """Run ``spec.max_iters`` iterations and keep every iterate.

    A run whose residual exceeds ``DIVERGENCE_RATIO * ||b||`` or turns
    non-finite stops early with ``diverged`` set; the offending iterate is
    not stored.

    Args:
        spec: method, iteration budget and start policy
        system: split system to solve
        truth_solution: optional reference solution for error norms
    """
    reference = None if truth_solution is None else as_vector(truth_solution, "truth_solution")
    if reference is not None and reference.shape[0] != system.n:
        raise DimensionError(f"truth_solution has {reference.shape[0]} entries, system has {system.n}")

    bound = DIVERGENCE_RATIO * float(np.linalg.norm(system.b))
    state = initial_state(system, spec.x0_policy)
    iterates: List[np.ndarray] = []
    residuals: List[float] = []
    diverged_at = None

    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(spec.max_iters):
            state = step(state, system, spec.method, spec.theta_mode)
            residual = float(np.linalg.norm(state.g))
            if not np.isfinite(residual) or not np.all(np.isfinite(state.x)) or residual > bound:
                diverged_at = state.t
                logger.debug(f"{spec.method.value} diverged at iteration {state.t}: ||g|| = {residual:.3e}")
                break
            iterates.append(state.x)
            residuals.append(residual)

    matrix = np.column_stack(iterates) if iterates else np.empty((system.n, 0), dtype=np.complex128)
    errors = None
    if reference is not None:
        errors = np.linalg.norm(matrix - reference[:, None], axis=0)
    return DetectorTrajectory(
        method=spec.method,
        iterates=matrix,
        residual_norms=np.asarray(residuals, dtype=float),
        error_norms=errors,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
    )


def iteration_matrix_radius(system: SplitSystem, method, radius_method: str = "dense") -> float:
    """Spectral radius of the iteration matrix ``I - M^{-1} A``.

    Below 1 the stationary method converges from any start; above 1 it
    diverges for almost every start.
    """
    method = parse_method(method)
    if not method.is_stationary:
        raise ConfigError(f"{method.value} has no iteration matrix")
    _check_diagonal(system, method)
    iteration = np.eye(system.n, dtype=np.complex128) - _apply_inverse(system, method, system.a)
    return spectral_radius(iteration, method=radius_method)
