"""
Stiefel-manifold primitives: symmetrization, tangent projection,
feasibility, polar retraction and seeded random points.

Iterates of the decentralized loop drift off the manifold and are kept as
plain ndarrays; only retract() and random_stiefel() hand out StiefelPoints.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.errors import DimensionError, SingularityError

FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """An n x p matrix with orthonormal columns (up to feasibility_tol)."""
    value: np.ndarray
    feasibility_tol: float = FEASIBILITY_TOL

    @property
    def n(self) -> int:
        return self.value.shape[0]

    @property
    def p(self) -> int:
        return self.value.shape[1]


def _as_matrix(X, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {X.shape}")
    return X


def sym(B) -> np.ndarray:
    """Symmetric part (B + B^T) / 2 of a square matrix."""
    B = _as_matrix(B, "B")
    if B.shape[0] != B.shape[1]:
        raise DimensionError(f"sym needs a square matrix, got {B.shape}")
    return (B + B.T) / 2.0


def proj_tangent(X, Y) -> np.ndarray:
    """
    Project Y with the Stiefel tangent map at X: Y - X sym(X^T Y).

    For feasible X this is the orthogonal projection onto the tangent space;
    the formula is applied as-is at infeasible X.
    """
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch: X {X.shape} vs Y {Y.shape}")
    return Y - X @ sym(X.T @ Y)


def feasibility(X) -> float:
    """Constraint violation ||X^T X - I_p||_F."""
    X = _as_matrix(X)
    p = X.shape[1]
    return float(np.linalg.norm(X.T @ X - np.eye(p), 'fro'))


def retract(X) -> StiefelPoint:
    """
    Polar retraction: the nearest orthonormal matrix U V^T from the thin SVD.

    Raises:
        SingularityError: X does not have full column rank
    """
    X = _as_matrix(X)
    n, p = X.shape
    if p > n:
        raise DimensionError(f"need n >= p, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise SingularityError("cannot retract a matrix with non-finite entries")
    U, s, Vt = scipy.linalg.svd(X, full_matrices=False)
    if s[-1] <= max(n, p) * np.finfo(float).eps * s[0] or s[0] == 0.0:
        raise SingularityError(f"rank-deficient input (smallest singular value {s[-1]:.3e})")
    return StiefelPoint(U @ Vt)


def random_stiefel(n: int, p: int, seed: int) -> StiefelPoint:
    """Orthonormal factor of a seeded Gaussian n x p matrix."""
    if p < 1 or n < p:
        raise DimensionError(f"need n >= p >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    return retract(rng.standard_normal((n, p)))
