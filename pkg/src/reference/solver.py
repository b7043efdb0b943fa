"""
Centralized high-precision reference solver.

Runs the single-agent form of the tracking dynamics on the aggregate
problem (G = sum_i G_i, so D = H at every step) with BB stepsizes and a
halving smoothing schedule sigma_j = max(sigma_final, 0.5^j), then retracts
the final iterate onto the manifold.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.config import (DEFAULT_BB_INITIAL, DEFAULT_BETA, DEFAULT_ETA_MAX, DEFAULT_ETA_MIN,
                        REFERENCE_HALVING_PERIOD, REFERENCE_MAX_ITERS, REFERENCE_SIGMA_FINAL, REFERENCE_TOL)
from src.errors import DivergenceError, ParameterError
from src.manifold.stiefel import StiefelPoint, feasibility, random_stiefel, retract
from src.metrics.records import stationarity_residual
from src.problem.objective import DecentralizedProblem
from src.tracker.directions import aggregate_gradient, direction_from_gradient
from src.tracker.stepsize import bb_stepsize, initial_stepsize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceResult:
    X_star: StiefelPoint
    final_objective: float
    iterations_used: int
    residual: float
    sigma: float
    converged: bool

    def to_dict(self) -> Dict:
        return {
            'final_objective': self.final_objective,
            'iterations_used': self.iterations_used,
            'residual': self.residual,
            'sigma': self.sigma,
            'converged': self.converged,
            'feasibility': feasibility(self.X_star.value),
        }


def _sigma_level(sigma_final: float, level: int) -> float:
    return max(sigma_final, 0.5 ** level)


def solve_centralized(problem: DecentralizedProblem,
                      sigma_final: float = REFERENCE_SIGMA_FINAL,
                      tol: float = REFERENCE_TOL,
                      max_iters: int = REFERENCE_MAX_ITERS,
                      X_init: Optional[np.ndarray] = None,
                      beta: float = DEFAULT_BETA,
                      eta_min: float = DEFAULT_ETA_MIN,
                      eta_max: float = DEFAULT_ETA_MAX,
                      bb_initial: float = DEFAULT_BB_INITIAL,
                      halving_period: int = REFERENCE_HALVING_PERIOD) -> ReferenceResult:
    """
    Solve the aggregate problem to high precision.

    A smoothing level is left after halving_period iterations, or earlier once
    both the stationarity residual and the feasibility violation are below tol.
    The run stops when that happens at sigma_final. When max_iters runs out
    first, the iterate with the smallest max(residual, feasibility) seen at
    sigma_final is returned instead (the last iterate if sigma_final was never
    reached).

    Args:
        problem: decentralized problem; only its aggregate is used
        sigma_final: smallest smoothing parameter
        tol: stopping tolerance on residual and feasibility
        max_iters: iteration cap (not an error when hit)
        X_init: starting point; a seeded random Stiefel point by default
        beta: penalty parameter of the direction field
        eta_min, eta_max, bb_initial: BB safeguards
        halving_period: iterations per smoothing level

    Returns:
        ReferenceResult with the retracted X_star and its residual at sigma_final
    """
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if not sigma_final > 0:
        raise ParameterError(f"sigma_final must be positive, got {sigma_final}")
    if halving_period < 1:
        raise ParameterError(f"halving_period must be >= 1, got {halving_period}")

    X = random_stiefel(problem.n, problem.p, 0).value if X_init is None else np.asarray(X_init, dtype=float).copy()
    problem.check_shape(X)

    level, level_start = 0, 0
    sigma = _sigma_level(sigma_final, level)
    H = direction_from_gradient(X, aggregate_gradient(problem, X, sigma), beta)
    eta = initial_stepsize(bb_initial, eta_min, eta_max)
    X_prev = H_prev = None
    best_X, best_score = None, np.inf
    converged = False

    iteration = 0
    while iteration < max_iters:
        if X_prev is not None:
            eta = bb_stepsize(X_prev, X, H_prev, H, iteration, eta, eta_min, eta_max)
        X_prev, H_prev = X, H
        X = X - eta * H
        iteration += 1

        if iteration - level_start >= halving_period and sigma > sigma_final:
            level, level_start = level + 1, iteration
            sigma = _sigma_level(sigma_final, level)
        G = aggregate_gradient(problem, X, sigma)
        H = direction_from_gradient(X, G, beta)
        if not np.all(np.isfinite(H)):
            raise DivergenceError(iteration, 0)

        residual = stationarity_residual(problem, X, sigma)
        feas = feasibility(X)
        if sigma <= sigma_final:
            score = max(residual, feas)
            if score < best_score:
                best_X, best_score = X, score
        if residual <= tol and feas <= tol:
            if sigma <= sigma_final:
                converged = True
                break
            level, level_start = level + 1, iteration
            sigma = _sigma_level(sigma_final, level)
            logger.debug("reference: level %d reached at iteration %d, sigma -> %.3e", level - 1, iteration, sigma)
            H = direction_from_gradient(X, aggregate_gradient(problem, X, sigma), beta)

    if converged:
        final = X
    else:
        final = best_X if best_X is not None else X
        logger.warning("reference solver hit max_iters=%d (best max(residual, feas) = %.3e, sigma = %.3e)",
                       max_iters, best_score, sigma)

    X_star = retract(final)
    residual = stationarity_residual(problem, X_star.value, sigma_final)
    objective = problem.objective(X_star.value)
    logger.info("reference solution: %d iterations, residual %.3e, objective %.10g", iteration, residual, objective)
    return ReferenceResult(X_star, objective, iteration, residual, sigma_final, converged)
