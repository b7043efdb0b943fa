"""
Worst-case parameter bounds (penalty beta and stepsize eta) under which the
smoothed gradient-tracking iteration is guaranteed to converge.

The bounds are advisory: practical runs (beta = 1, BB steps) usually violate
them by orders of magnitude.
"""

import logging
import math
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Tuple

import numpy as np

from src.config import BOUNDS_SAMPLES
from src.errors import ParameterError
from src.network.mixing import MixingMatrix
from src.problem.objective import DecentralizedProblem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParameterBounds:
    M_f: float
    M_g: float
    L_r: float
    beta_lower: float
    eta_upper: float
    lam: float
    d: int
    p: int
    mf_exact: bool = False

    def to_dict(self) -> Dict:
        return asdict(self)

    def check(self, beta: float, eta: Optional[float]) -> Tuple[bool, Optional[bool]]:
        """
        (beta ok, eta ok). eta ok is None when eta is not a fixed number (BB mode).
        The eta test uses eta_upper evaluated at the configured beta.
        """
        beta_ok = beta > self.beta_lower
        if eta is None:
            return beta_ok, None
        return beta_ok, 0 < eta < self.eta_upper_at(beta)

    def eta_upper_at(self, beta: float) -> float:
        return eta_upper_bound(self.L_r, beta, self.lam, self.d, self.p)


def gradient_ball_radius(d: int, p: int) -> float:
    return math.sqrt(7.0 * d * p / 6.0) + math.sqrt(d)


def penalty_constant(M_f: float, L_g: float, d: int, p: int) -> float:
    """M_g = 3 (M_f + L_g)(7dp + 6d + 3) / 6."""
    return 3.0 * (M_f + L_g) * (7 * d * p + 6 * d + 3) / 6.0


def smoothness_constant(L_f: float, sigma: float, d: int, p: int) -> float:
    """L_r = 7dp (L_f + 1/sigma) + 6d + 3."""
    return 7.0 * d * p * (L_f + 1.0 / sigma) + 6 * d + 3


def beta_lower_bound(M_f: float, M_g: float, L_f: float, L_g: float, sigma: float, d: int, p: int) -> float:
    return max(
        (6.0 + 21.0 * (M_f + L_g)) / 5.0,
        72.0 * (4.0 + 3.0 * M_g) / 5.0,
        1.0 / (7 * d * p + 6 * d),
        22.0 * (L_f + 1.0 / sigma) ** 2,
    )


def eta_upper_bound(L_r: float, beta: float, lam: float, d: int, p: int) -> float:
    """d (1 - lambda^2) / (48 (L_r + (7dp + 6d) beta)^2)."""
    return d * (1.0 - lam ** 2) / (48.0 * (L_r + (7 * d * p + 6 * d) * beta) ** 2)


def estimate_gradient_sup(problem: DecentralizedProblem, radius: float,
                          samples: int = BOUNDS_SAMPLES, seed: int = 0) -> Tuple[float, bool]:
    """
    M_f = sup_i sup_{||X||_F <= radius} ||grad f_i(X)||_F.

    Exact when every agent supplies grad_bound; otherwise the largest value
    seen at `samples` random points on the sphere of that radius (a lower
    estimate of the true supremum).
    """
    smooth = [f for f, _ in problem.agents]
    if all(f.grad_bound is not None for f in smooth):
        return max(f.grad_bound(radius) for f in smooth), True

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        G = rng.standard_normal((problem.n, problem.p))
        X = radius * G / np.linalg.norm(G)
        for f in smooth:
            best = max(best, float(np.linalg.norm(f.grad(X))))
    logger.info("M_f estimated by sampling %d points: %.6g", samples, best)
    return best, False


def condition1_bounds(problem: DecentralizedProblem, sigma: float, mixing: MixingMatrix,
                      samples: int = BOUNDS_SAMPLES, seed: int = 0) -> ParameterBounds:
    if not sigma > 0:
        raise ParameterError(f"smoothing parameter must be positive, got {sigma}")
    d, p = problem.d, problem.p
    M_f, exact = estimate_gradient_sup(problem, gradient_ball_radius(d, p), samples, seed)
    M_g = penalty_constant(M_f, problem.L_g, d, p)
    L_r = smoothness_constant(problem.L_f, sigma, d, p)
    beta_lower = beta_lower_bound(M_f, M_g, problem.L_f, problem.L_g, sigma, d, p)
    eta_upper = eta_upper_bound(L_r, beta_lower, mixing.lam, d, p)

    return ParameterBounds(M_f, M_g, L_r, beta_lower, eta_upper, mixing.lam, d, p, exact)
