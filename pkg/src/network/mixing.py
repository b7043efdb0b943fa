"""
Mixing matrices for a communication graph and the neighbor-gather mix step.
"""

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConnectivityError, DimensionError, ParameterError
from src.network.topology import Graph, is_connected

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-14
STOCHASTIC_TOL = 1e-12


def connectivity_lambda(W: np.ndarray) -> float:
    """lambda = ||W - 11^T/d||_2, via the symmetric eigendecomposition."""
    d = W.shape[0]
    eigenvalues = np.linalg.eigvalsh(W - np.full((d, d), 1.0 / d))
    return float(np.max(np.abs(eigenvalues)))


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Symmetric doubly-stochastic W conforming to graph, with lambda < 1."""
    W: np.ndarray
    graph: Graph
    lam: float = field(default=None)
    support: Tuple[Tuple[int, ...], ...] = field(default=None, repr=False)

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        d = self.graph.d
        if W.shape != (d, d):
            raise DimensionError(f"W must be {d}x{d}, got {W.shape}")
        if np.max(np.abs(W - W.T)) > SYMMETRY_TOL:
            raise ParameterError("mixing matrix is not symmetric")
        if np.any(W < 0):
            raise ParameterError("mixing matrix has negative entries")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise ParameterError("mixing matrix rows do not sum to 1")
        adjacency = self.graph.adjacency() + np.eye(d, dtype=int)
        if np.any((adjacency == 0) & (W != 0)):
            raise ParameterError("mixing matrix has weight on a non-edge")

        object.__setattr__(self, 'W', W)
        if self.lam is None:
            object.__setattr__(self, 'lam', connectivity_lambda(W))
        # nonzero columns of each row, ascending: the fixed summation order of mix()
        object.__setattr__(self, 'support', tuple(tuple(np.flatnonzero(W[i]).tolist()) for i in range(d)))
        if self.lam >= 1.0:
            raise ConnectivityError(f"lambda = {self.lam:.6g} >= 1; the graph does not mix")

    @property
    def d(self) -> int:
        return self.graph.d

    @classmethod
    def single_agent(cls) -> "MixingMatrix":
        return cls(np.ones((1, 1)), Graph(1, frozenset()))


def metropolis_weights(graph: Graph) -> MixingMatrix:
    """
    W(i,j) = 1 / (1 + max(deg i, deg j)) on edges, W(i,i) absorbs the remainder.
    """
    if not is_connected(graph.d, graph.edges):
        raise ConnectivityError("Metropolis weights need a connected graph")
    d = graph.d
    degrees = [graph.degree(i) for i in range(d)]
    W = np.zeros((d, d))
    for i, j in graph.edges:
        W[i, j] = W[j, i] = 1.0 / (1.0 + max(degrees[i], degrees[j]))
    for i in range(d):
        W[i, i] = 1.0 - (W[i].sum() - W[i, i])
    mixing = MixingMatrix(W, graph)
    logger.debug("Metropolis weights on %d agents: lambda = %.6g", d, mixing.lam)
    return mixing


def _gather(mixing: MixingMatrix, payloads: Sequence[np.ndarray], i: int) -> np.ndarray:
    row = mixing.W[i]
    total = np.zeros_like(payloads[i])
    for j in mixing.support[i]:
        total += row[j] * payloads[j]
    return total


def mix(mixing: MixingMatrix, payloads: Sequence[np.ndarray], executor: Optional[Executor] = None) -> List[np.ndarray]:
    """
    One round of neighbor exchange: output[i] = sum_j W(i,j) payloads[j].

    Only payloads[j] with W(i,j) != 0 are read, summed over ascending j, so
    the result does not depend on whether rows run on an executor.
    """
    if len(payloads) != mixing.d:
        raise DimensionError(f"expected {mixing.d} payloads, got {len(payloads)}")
    payloads = [np.asarray(P, dtype=float) for P in payloads]
    shape = payloads[0].shape
    for j, P in enumerate(payloads):
        if P.shape != shape:
            raise DimensionError(f"payload {j} has shape {P.shape}, expected {shape}")

    if executor is None:
        return [_gather(mixing, payloads, i) for i in range(mixing.d)]
    return list(executor.map(lambda i: _gather(mixing, payloads, i), range(mixing.d)))
