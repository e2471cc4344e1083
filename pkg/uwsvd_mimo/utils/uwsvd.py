"""User-wise SVD preprocessing for iterative zero-forcing detection.

Each user's sub-channel ``H_k`` (M x N_k) is factored as
``U_k diag(sigma_k) V_k^H``. Stacking the left factors gives
``H = Psi diag(sigma) blockdiag(V)^H`` with ``Psi = [U_1, ..., U_K]``.
Because every U_k has orthonormal columns, ``A = Psi^H Psi`` has a unit
diagonal and its intra-user blocks are identities, so the per-user
correlation and path-loss spread that make ``H^H H`` ill-conditioned drop
out of the system the iterative detectors solve.

Cost: O(M * sum N_k**2) for the per-user SVDs plus O(M * N**2) to form A.
Post-processing ``V Sigma^{-1} x`` costs O(sum N_k**2 + N) per iterate.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, RankDeficientError, ResultWriteError, SingularSigmaError
from .numerics import as_matrix, as_vector, condition_number, economy_svd, pseudo_inverse_solve

logger = logging.getLogger(__name__)

# sigma_min(H_k) / sigma_max(H_k) at or below this is rank deficient.
USER_RANK_TOL = 1e-12

# Post-processing refuses singular values at or below this fraction of max(sigma).
SIGMA_TOL = 1e-14


@dataclass(frozen=True)
class UserPartition:
    """Per-user antenna counts defining the column blocks of H.

    Attributes:
        sizes: N_k for every user terminal, in column order
    """
    sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes:
            raise DimensionError("A user partition needs at least one user")
        if any(n < 1 for n in sizes):
            raise DimensionError(f"Every user needs at least one antenna: {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def uniform(cls, k_users: int, n_per_user: int) -> "UserPartition":
        return cls(tuple([n_per_user] * k_users))

    @property
    def k_users(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def slices(self) -> Tuple[slice, ...]:
        """Column slice of each user, in order."""
        bounds = np.concatenate(([0], np.cumsum(self.sizes)))
        return tuple(slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]))


@dataclass(frozen=True)
class UwSvdFactors:
    """Block factors of ``H = Psi diag(sigma) blockdiag(V)^H``.

    Attributes:
        psi: M x N matrix whose column blocks are the U_k
        sigma: N positive singular values, block-concatenated per user
        v_blocks: unitary V_k per user
        a: N x N Hermitian matrix Psi^H Psi with unit diagonal
        partition: user column blocks
        b_cached: Psi^H y when a received vector was supplied
    """
    psi: np.ndarray
    sigma: np.ndarray
    v_blocks: Tuple[np.ndarray, ...]
    a: np.ndarray
    partition: UserPartition
    b_cached: Optional[np.ndarray] = field(default=None)

    @property
    def v_dense(self) -> np.ndarray:
        """blockdiag(V_1, ..., V_K) as a dense N x N matrix."""
        return scipy.linalg.block_diag(*self.v_blocks)

    def user_sigmas(self, k: int) -> np.ndarray:
        return self.sigma[self.partition.slices()[k]]

    def reconstruct(self) -> np.ndarray:
        return (self.psi * self.sigma) @ self.v_dense.conj().T


class ConditioningReport(NamedTuple):
    """Condition numbers of the UW-SVD system and of the plain Gram system."""
    cond_a: float
    cond_a_bar: float


def preprocess(h, partition: UserPartition, y=None) -> UwSvdFactors:
    """Factor every user's sub-channel and build ``A = Psi^H Psi``.

    Args:
        h: M x N channel matrix
        partition: user column blocks; partition.total must equal N
        y: optional received vector; when given, ``b = Psi^H y`` is cached

    Returns:
        UwSvdFactors

    Raises:
        DimensionError: if the partition does not cover h's columns
        RankDeficientError: naming the first user whose block is rank deficient
    """
    h = as_matrix(h, "h")
    rows, cols = h.shape
    if partition.total != cols:
        raise DimensionError(f"Partition covers {partition.total} columns, h has {cols}")

    psi = np.empty_like(h)
    sigma = np.empty(cols, dtype=float)
    v_blocks = []
    for k, cols_k in enumerate(partition.slices()):
        block = h[:, cols_k]
        if rows < block.shape[1]:
            raise RankDeficientError(
                f"User {k} has {block.shape[1]} antennas but only {rows} service antennas exist", user=k
            )
        svd = economy_svd(block)
        if svd.sigma[-1] <= USER_RANK_TOL * svd.sigma[0]:
            raise RankDeficientError(
                f"User {k} sub-channel is rank deficient: sigma={svd.sigma}", user=k
            )
        psi[:, cols_k] = svd.u
        sigma[cols_k] = svd.sigma
        v_blocks.append(svd.v)

    a = psi.conj().T @ psi
    a = 0.5 * (a + a.conj().T)
    logger.debug(f"UW-SVD factored {rows}x{cols} channel over {partition.k_users} users")

    factors = UwSvdFactors(psi=psi, sigma=sigma, v_blocks=tuple(v_blocks), a=a, partition=partition)
    if y is not None:
        factors = replace(factors, b_cached=form_b(factors, y))
    return factors


def form_b(factors: UwSvdFactors, y) -> np.ndarray:
    """Right-hand side ``b = Psi^H y`` of the UW-SVD system."""
    y = as_vector(y, "y")
    if y.shape[0] != factors.psi.shape[0]:
        raise DimensionError(f"y has {y.shape[0]} entries, Psi has {factors.psi.shape[0]} rows")
    return factors.psi.conj().T @ y


def postprocess(factors: UwSvdFactors, x_hat) -> np.ndarray:
    """Recover symbol estimates ``V Sigma^{-1} x_hat`` blockwise.

    Args:
        factors: UW-SVD factors
        x_hat: length-N estimate, or an N x T matrix holding one iterate per column

    Returns:
        Array with the same shape as x_hat.

    Raises:
        SingularSigmaError: if any sigma <= SIGMA_TOL * max(sigma)
    """
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    n = factors.sigma.shape[0]
    if x_hat.ndim not in (1, 2) or x_hat.shape[0] != n:
        raise DimensionError(f"x_hat must have {n} rows, got shape {x_hat.shape}")
    if np.any(factors.sigma <= SIGMA_TOL * np.max(factors.sigma)):
        raise SingularSigmaError(f"Singular value too small for post-processing: min={factors.sigma.min():.3e}")

    scale = factors.sigma if x_hat.ndim == 1 else factors.sigma[:, None]
    scaled = x_hat / scale
    out = np.empty_like(scaled)
    for cols_k, v_k in zip(factors.partition.slices(), factors.v_blocks):
        out[cols_k] = v_k @ scaled[cols_k]
    return out


def zf_via_uwsvd(h, partition: UserPartition, y) -> np.ndarray:
    """Zero-forcing estimate computed through the UW-SVD equivalent model.

    Solves ``x_hat = Psi^+ y`` exactly and post-processes it; the result
    equals ``pseudo_inverse_solve(h, y)`` up to rounding.
    """
    factors = preprocess(h, partition)
    return postprocess(factors, pseudo_inverse_solve(factors.psi, y))


def conditioning_report(h, partition: UserPartition) -> ConditioningReport:
    """Return ``(cond(Psi^H Psi), cond(H^H H))``."""
    h = as_matrix(h, "h")
    factors = preprocess(h, partition)
    return ConditioningReport(
        cond_a=condition_number(factors.a),
        cond_a_bar=condition_number(h.conj().T @ h),
    )


def save_factors(factors: UwSvdFactors, path) -> Path:
    """Write factors to a compressed ``.npz`` archive for debugging."""
    path = Path(path)
    arrays = {
        "psi": factors.psi,
        "sigma": factors.sigma,
        "a": factors.a,
        "sizes": np.asarray(factors.partition.sizes),
    }
    for k, v_k in enumerate(factors.v_blocks):
        arrays[f"v_{k}"] = v_k
    if factors.b_cached is not None:
        arrays["b"] = factors.b_cached
    try:
        with open(path, "wb") as fh:
            np.savez_compressed(fh, **arrays)
    except OSError as e:
        raise ResultWriteError(f"Could not write factors to {path}: {e}") from e
    logger.info(f"Wrote UW-SVD factors to {path}")
    return path


def load_factors(path) -> UwSvdFactors:
    """Read factors written by ``save_factors``."""
    with np.load(Path(path)) as data:
        partition = UserPartition(tuple(int(n) for n in data["sizes"]))
        v_blocks = tuple(data[f"v_{k}"] for k in range(partition.k_users))
        return UwSvdFactors(
            psi=data["psi"],
            sigma=data["sigma"],
            v_blocks=v_blocks,
            a=data["a"],
            partition=partition,
            b_cached=data["b"] if "b" in data.files else None,
        )
