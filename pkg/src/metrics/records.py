"""
Per-iteration measurements of a decentralized run.

These functions act as a centralized observer: they evaluate every agent's
functions at the network average. They are used for reporting only and never
feed back into the update.
"""

from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.manifold.stiefel import feasibility, proj_tangent
from src.problem.objective import DecentralizedProblem
from src.tracker.directions import aggregate_gradient, approximate_riemannian_gradient, local_gradient

RECORD_FIELDS = ('k', 'dist', 'feas', 'consensus', 'stat_residual', 'sigma', 'eta')


@dataclass(frozen=True)
class RunRecord:
    k: int
    dist: Optional[float]
    feas: float
    consensus: float
    stat_residual: float
    sigma: float
    eta: float

    def to_dict(self) -> Dict:
        return asdict(self)


def average_iterate(iterates: Sequence[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(iterates[0], dtype=float)
    for X in iterates:
        total += X
    return total / len(iterates)


def align_columns(X: np.ndarray, X_ref: np.ndarray) -> np.ndarray:
    """Flip column signs of X so each column points the same way as X_ref's."""
    signs = np.where(np.sum(X * X_ref, axis=0) < 0, -1.0, 1.0)
    return X * signs


def stationarity_residual(problem: DecentralizedProblem, X: np.ndarray, sigma: float) -> float:
    """||proj_X(G(X))||_F with G = sum_i G_i."""
    return float(np.linalg.norm(proj_tangent(X, aggregate_gradient(problem, X, sigma))))


def record(iterates: Sequence[np.ndarray], problem: DecentralizedProblem, sigma: float, eta: float, k: int,
           X_star: Optional[np.ndarray] = None, align: bool = False) -> RunRecord:
    """
    Measure one round.

    Args:
        iterates: local iterates X_i (one per agent)
        problem: the decentralized problem (all agents' functions are evaluated)
        sigma: smoothing parameter of the round
        eta: stepsize of the round (mean over agents in BB mode)
        k: round index
        X_star: reference solution; dist is None without one
        align: flip column signs of each X_i towards X_star before measuring dist
    """
    X_bar = average_iterate(iterates)
    d = len(iterates)

    dist = None
    if X_star is not None:
        if align:
            dist = sum(float(np.linalg.norm(align_columns(X, X_star) - X_star)) for X in iterates) / d
        else:
            dist = sum(float(np.linalg.norm(X - X_star)) for X in iterates) / d

    feas = sum(feasibility(X) for X in iterates) / d
    consensus = sum(float(np.linalg.norm(X - X_bar)) for X in iterates) / d
    return RunRecord(
        k=k,
        dist=dist,
        feas=feas,
        consensus=consensus,
        stat_residual=stationarity_residual(problem, X_bar, sigma),
        sigma=float(sigma),
        eta=float(eta),
    )


def rate_quantities(iterates: Sequence[np.ndarray], problem: DecentralizedProblem, sigma: float) -> Tuple[float, float]:
    """(||R(X_bar)||_F^2, ||X_bar^T X_bar - I||_F^2) with R = sum_i R_i."""
    X_bar = average_iterate(iterates)
    R = np.zeros_like(X_bar)
    for i in range(problem.d):
        R += approximate_riemannian_gradient(X_bar, local_gradient(problem, i, X_bar, sigma))
    return float(np.sum(R * R)), feasibility(X_bar) ** 2


class RateMonitor:
    """
    Running minima over k of ||R(X_bar)||^2 and feasibility^2, the two
    quantities whose minimum over the first K rounds decays like 1/K.
    """

    def __init__(self, problem: DecentralizedProblem, sigma: float):
        self.problem = problem
        self.sigma = sigma
        self.min_residual_sq: List[float] = []
        self.min_feas_sq: List[float] = []

    def observe(self, iterates: Sequence[np.ndarray]):
        residual_sq, feas_sq = rate_quantities(iterates, self.problem, self.sigma)
        if self.min_residual_sq:
            residual_sq = min(residual_sq, self.min_residual_sq[-1])
            feas_sq = min(feas_sq, self.min_feas_sq[-1])
        self.min_residual_sq.append(residual_sq)
        self.min_feas_sq.append(feas_sq)

    def minima(self, K: int) -> Tuple[float, float]:
        """Minima over the first K observations."""
        return self.min_residual_sq[K - 1], self.min_feas_sq[K - 1]
