"""
Per-agent gradient of the smoothed local function and the local descent direction

    G_i(X) = grad f_i(X) + grad env_{sigma, g_i}(X)
    R_i(X) = G_i(X) (3I - X^T X) / 2 - X sym(X^T G_i(X))
    H_i(X) = beta X (X^T X - I) + R_i(X)
"""

import numpy as np

from src.errors import ParameterError
from src.manifold.stiefel import sym
from src.problem.objective import DecentralizedProblem
from src.smoothing.moreau import env_grad


def local_gradient(problem: DecentralizedProblem, i: int, X: np.ndarray, sigma: float) -> np.ndarray:
    f, g = problem.agents[i]
    return f.grad(X) + env_grad(g, sigma, X)


def aggregate_gradient(problem: DecentralizedProblem, X: np.ndarray, sigma: float) -> np.ndarray:
    """G(X) = sum_i G_i(X), summed in agent order. Needs every agent's data."""
    total = np.zeros_like(X, dtype=float)
    for i in range(problem.d):
        total += local_gradient(problem, i, X, sigma)
    return total


def approximate_riemannian_gradient(X: np.ndarray, G: np.ndarray) -> np.ndarray:
    """R(X) for a given Euclidean gradient G; equals proj_tangent(X, G) at feasible X."""
    p = X.shape[1]
    gram = X.T @ X
    return 0.5 * G @ (3.0 * np.eye(p) - gram) - X @ sym(X.T @ G)


def penalty_direction(X: np.ndarray, beta: float) -> np.ndarray:
    p = X.shape[1]
    return beta * X @ (X.T @ X - np.eye(p))


def direction_from_gradient(X: np.ndarray, G: np.ndarray, beta: float) -> np.ndarray:
    return penalty_direction(X, beta) + approximate_riemannian_gradient(X, G)


def descent_direction(problem: DecentralizedProblem, i: int, X: np.ndarray, sigma: float, beta: float) -> np.ndarray:
    if not beta > 0:
        raise ParameterError(f"penalty parameter beta must be positive, got {beta}")
    return direction_from_gradient(X, local_gradient(problem, i, X, sigma), beta)
