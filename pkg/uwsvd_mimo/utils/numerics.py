"""Dense complex linear-algebra kernels.

Everything here is a pure function of its arguments. Matrices are
``numpy.ndarray`` objects of dtype ``complex128`` addressed as ``a[row, col]``;
vectors are 1-D ``complex128`` arrays.

The economy SVD is tuned for the tall, narrow per-user blocks of a MIMO
channel (M rows, N_k in 1..8 columns): the right singular vectors come from
the N_k x N_k Gram matrix, then a one-sided Jacobi pass polishes the
rotated columns so that orthonormality and small singular values stay
accurate. Cost is O(M * N_k**2) per block.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, RankDeficientError

logger = logging.getLogger(__name__)

# Relative threshold below which a matrix is treated as rank deficient.
RANK_TOL = 1e-12

# Below this sigma_min / sigma_max ratio the Gram eigenvectors are discarded
# and Jacobi starts from the raw columns.
GRAM_FALLBACK_RATIO = 1e-6

DEFAULT_MAX_SWEEPS = 60
DEFAULT_POWER_ITERS = 10000


@dataclass(frozen=True)
class SvdResult:
    """Economy-size SVD ``a = u @ diag(sigma) @ v^H``.

    Attributes:
        u: rows x cols matrix with orthonormal columns
        sigma: cols nonnegative singular values, nonincreasing
        v: cols x cols unitary matrix
    """
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite, non-empty complex128 matrix."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce ``v`` to a finite complex128 vector."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite entries")
    return arr


def economy_svd(a, max_sweeps: int = DEFAULT_MAX_SWEEPS) -> SvdResult:
    """Compute the economy-size SVD of a tall matrix.

    Args:
        a: rows x cols complex matrix with rows >= cols
        max_sweeps: Jacobi sweep budget

    Returns:
        SvdResult with the largest-magnitude entry of every V column real
        and positive.

    Raises:
        DimensionError: if rows < cols
        NumericalError: if Jacobi does not converge within max_sweeps
    """
    a = as_matrix(a, "a")
    rows, cols = a.shape
    if rows < cols:
        raise DimensionError(f"economy_svd needs rows >= cols, got {rows}x{cols}")

    # eigh returns ascending eigenvalues
    w, v0 = scipy.linalg.eigh(a.conj().T @ a)
    w = w[::-1]
    v0 = v0[:, ::-1]
    sigma0 = np.sqrt(np.clip(w, 0.0, None))

    if sigma0[0] > 0.0 and sigma0[-1] > GRAM_FALLBACK_RATIO * sigma0[0]:
        b, v = _one_sided_jacobi(a @ v0, v0, max_sweeps)
    else:
        logger.debug(f"Gram path skipped for {rows}x{cols} block (ratio below {GRAM_FALLBACK_RATIO})")
        b, v = _one_sided_jacobi(a.copy(), np.eye(cols, dtype=np.complex128), max_sweeps)

    sigma = np.linalg.norm(b, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    b = b[:, order]
    v = v[:, order]

    u = np.empty_like(b)
    nonzero = sigma > 0.0
    u[:, nonzero] = b[:, nonzero] / sigma[nonzero]
    if not np.all(nonzero):
        u[:, ~nonzero] = _orthonormal_complement(u[:, nonzero], rows, int(np.count_nonzero(~nonzero)))

    u, v = _normalize_phase(u, v)
    return SvdResult(u=u, sigma=sigma, v=v)


def _one_sided_jacobi(b: np.ndarray, v: np.ndarray, max_sweeps: int):
    """Orthogonalize the columns of ``b`` by plane rotations, accumulating them in ``v``."""
    rows, cols = b.shape
    tol = 8.0 * np.finfo(float).eps * rows
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = float(np.vdot(b[:, p], b[:, p]).real)
                beta = float(np.vdot(b[:, q], b[:, q]).real)
                gamma = np.vdot(b[:, p], b[:, q])
                mag = abs(gamma)
                if mag == 0.0 or mag <= tol * math.sqrt(alpha * beta):
                    continue
                rotated = True
                # rotate column q so that b_p^H b_q is real positive
                phase = np.conj(gamma / mag)
                zeta = (beta - alpha) / (2.0 * mag)
                t = (1.0 if zeta >= 0.0 else -1.0) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                for mat in (b, v):
                    col_p = mat[:, p].copy()
                    col_q = mat[:, q] * phase
                    mat[:, p] = c * col_p - s * col_q
                    mat[:, q] = s * col_p + c * col_q
        if not rotated:
            logger.debug(f"Jacobi converged after {sweep} sweeps on {rows}x{cols} block")
            return b, v
    raise NumericalError(f"One-sided Jacobi did not converge within {max_sweeps} sweeps")


def _orthonormal_complement(u_known: np.ndarray, rows: int, count: int) -> np.ndarray:
    if u_known.shape[1] == 0:
        return np.eye(rows, count, dtype=np.complex128)
    return scipy.linalg.null_space(u_known.conj().T)[:, :count]


def _normalize_phase(u: np.ndarray, v: np.ndarray):
    """Make the largest-magnitude entry of each V column real positive."""
    u = u.copy()
    v = v.copy()
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        magnitude = abs(v[i, j])
        if magnitude == 0.0:
            continue
        rot = np.conj(v[i, j] / magnitude)
        v[:, j] *= rot
        u[:, j] *= rot
        v[i, j] = magnitude
    return u, v


def pseudo_inverse_solve(h, y, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Least-squares (zero-forcing) solve ``(H^H H)^{-1} H^H y``.

    Used as the exact reference the iterative detectors are judged against.

    Raises:
        DimensionError: if y does not have h.rows entries
        RankDeficientError: if sigma_min <= rank_tol * sigma_max
    """
    h = as_matrix(h, "h")
    y = as_vector(y, "y")
    if y.shape[0] != h.shape[0]:
        raise DimensionError(f"y has {y.shape[0]} entries, h has {h.shape[0]} rows")
    if h.shape[0] < h.shape[1]:
        raise RankDeficientError(f"h is {h.shape[0]}x{h.shape[1]}; a wide matrix has no full column rank")

    u, s, vh = scipy.linalg.svd(h, full_matrices=False)
    if s[-1] <= rank_tol * s[0]:
        raise RankDeficientError(
            f"h is rank deficient: sigma_min={s[-1]:.3e}, sigma_max={s[0]:.3e}"
        )
    return vh.conj().T @ ((u.conj().T @ y) / s)


def condition_number(a) -> float:
    """2-norm condition number sigma_max / sigma_min; ``inf`` when sigma_min is 0."""
    a = as_matrix(a, "a")
    s = scipy.linalg.svdvals(a)
    if s[-1] == 0.0:
        return math.inf
    return float(s[0] / s[-1])


def spectral_radius(b, method: str = "dense", max_iters: int = DEFAULT_POWER_ITERS,
                    tol: float = 1e-12) -> float:
    """Largest eigenvalue magnitude of a square matrix.

    Args:
        b: square complex matrix
        method: 'dense' (LAPACK eigenvalues) or 'power' (power iteration)
        max_iters: iteration budget for the power method
        tol: relative change at which the power method stops

    Raises:
        DimensionError: if b is not square or method is unknown
        NumericalError: if the eigensolver fails or power iteration runs out of budget
    """
    b = as_matrix(b, "b")
    if b.shape[0] != b.shape[1]:
        raise DimensionError(f"spectral_radius needs a square matrix, got {b.shape}")

    if method == "dense":
        try:
            eigenvalues = scipy.linalg.eigvals(b)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Eigenvalue computation failed: {e}") from e
        return float(np.max(np.abs(eigenvalues)))
    if method == "power":
        return _power_radius(b, max_iters, tol)
    raise DimensionError(f"Unknown spectral_radius method: {method}")


def _power_radius(b: np.ndarray, max_iters: int, tol: float) -> float:
    n = b.shape[0]
    if not np.any(b):
        return 0.0
    # fixed start vector keeps the diagnostic deterministic
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iters):
        y = b @ x
        norm_y = float(np.linalg.norm(y))
        if norm_y == 0.0:
            return 0.0
        if abs(norm_y - estimate) <= tol * norm_y:
            return norm_y
        estimate = norm_y
        x = y / norm_y
    raise NumericalError(f"Power iteration did not converge within {max_iters} iterations")
