"""
Certificate that a point is first-order epsilon-stationary for the original
non-smooth problem, built from the smoothed gradient and prox points
Y_i = prox_{sigma, g_i}(X) (the envelope gradient lies in the subdifferential
of g_i at Y_i).
"""

from dataclasses import dataclass, asdict
from typing import Dict

import numpy as np

from src.errors import ParameterError
from src.manifold.stiefel import feasibility
from src.metrics.records import stationarity_residual
from src.problem.objective import DecentralizedProblem
from src.smoothing.moreau import prox
from src.tracker.directions import aggregate_gradient, approximate_riemannian_gradient


@dataclass(frozen=True)
class StationarityCertificate:
    epsilon: float
    grad_residual: float
    max_prox_gap: float
    feas: float
    projected_gradient_bound: float  # diagnostic, ||R|| + ||G|| feas / 2
    passed: bool
    sigma: float
    sigma_premise: bool  # sigma <= epsilon / (2 L_g)

    def to_dict(self) -> Dict:
        return asdict(self)


def max_prox_gap(problem: DecentralizedProblem, X: np.ndarray, sigma: float) -> float:
    return max(float(np.linalg.norm(X - prox(g, sigma, X))) for _, g in problem.agents)


def check_epsilon_stationary(X, problem: DecentralizedProblem, sigma: float, epsilon: float) -> StationarityCertificate:
    if not sigma > 0:
        raise ParameterError(f"smoothing parameter must be positive, got {sigma}")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    X = np.asarray(X, dtype=float)
    problem.check_shape(X)

    grad_residual = stationarity_residual(problem, X, sigma)
    gap = max_prox_gap(problem, X, sigma)
    feas = feasibility(X)
    L_g = problem.L_g
    premise = L_g == 0 or sigma <= epsilon / (2.0 * L_g)
    return StationarityCertificate(
        epsilon=epsilon,
        grad_residual=grad_residual,
        max_prox_gap=gap,
        feas=feas,
        projected_gradient_bound=projected_gradient_bound(problem, X, sigma),
        passed=grad_residual <= epsilon and gap <= epsilon and feas <= epsilon,
        sigma=sigma,
        sigma_premise=premise,
    )


def projected_gradient_bound(problem: DecentralizedProblem, X: np.ndarray, sigma: float) -> float:
    """
    ||R(X)||_F + ||G(X)||_F ||X^T X - I||_F / 2, an upper bound on the projected
    gradient norm in terms of the quantities the tracking iteration drives to zero
    (proj_X(G) = R(X) + G (X^T X - I) / 2).
    """
    G = aggregate_gradient(problem, X, sigma)
    R = approximate_riemannian_gradient(X, G)
    return float(np.linalg.norm(R)) + 0.5 * float(np.linalg.norm(G)) * feasibility(X)
