"""
Objective abstraction: sum over agents of f_i (smooth) + g_i (non-smooth, convex).
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigurationError, DimensionError
from src.smoothing.moreau import Regularizer, env_value, reg_value


@dataclass(frozen=True)
class LocalSmooth:
    """
    Smooth local loss f_i with its Euclidean gradient.

    grad_bound(r), when given, returns an exact upper bound on ||grad(X)||_F
    over the ball ||X||_F <= r (used by the convergence-bound calculator).
    """
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    grad_bound: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class DecentralizedProblem:
    """min over S_{n,p} of sum_i f_i(X) + g_i(X), agent i owning (f_i, g_i)."""
    agents: Tuple[Tuple[LocalSmooth, Regularizer], ...]
    n: int
    p: int

    def __post_init__(self):
        object.__setattr__(self, 'agents', tuple(tuple(pair) for pair in self.agents))
        if len(self.agents) < 1:
            raise ConfigurationError("a problem needs at least one agent")
        if self.p < 1 or self.n < self.p:
            raise DimensionError(f"need n >= p >= 1, got n={self.n}, p={self.p}")

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[LocalSmooth, Regularizer]], n: int, p: int) -> "DecentralizedProblem":
        return cls(tuple(pairs), n, p)

    @property
    def d(self) -> int:
        return len(self.agents)

    @property
    def L_f(self) -> float:
        return max(f.lipschitz for f, _ in self.agents)

    @property
    def L_g(self) -> float:
        return max(g.lipschitz for _, g in self.agents)

    def smooth(self, i: int) -> LocalSmooth:
        return self.agents[i][0]

    def regularizer(self, i: int) -> Regularizer:
        return self.agents[i][1]

    def check_shape(self, X: np.ndarray):
        if X.shape != (self.n, self.p):
            raise DimensionError(f"expected a {self.n}x{self.p} matrix, got {X.shape}")

    def objective(self, X) -> float:
        """Original non-smooth objective sum_i f_i(X) + g_i(X)."""
        X = np.asarray(X, dtype=float)
        return float(sum(f.value(X) + reg_value(g, X) for f, g in self.agents))

    def smoothed_objective(self, X, sigma: float) -> float:
        """Smoothed objective sum_i f_i(X) + env_{sigma, g_i}(X)."""
        X = np.asarray(X, dtype=float)
        return float(sum(f.value(X) + env_value(g, sigma, X) for f, g in self.agents))
