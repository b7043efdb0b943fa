"""
Communication graphs: Erdos-Renyi sampling with resampling until connected,
standard topologies, and edge-list import/export.
"""

import logging
import os
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from src.errors import ConfigurationError, ConnectivityError, IngestionError, StorageError

logger = logging.getLogger(__name__)

ER_MAX_ATTEMPTS = 1000


def _normalize_edges(d: int, edges: Iterable[Tuple[int, int]]) -> FrozenSet[Tuple[int, int]]:
    normalized = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ConfigurationError(f"self-loop at node {i}")
        if not (0 <= i < d and 0 <= j < d):
            raise ConfigurationError(f"edge ({i}, {j}) outside nodes 0..{d - 1}")
        normalized.add((min(i, j), max(i, j)))
    return frozenset(normalized)


def is_connected(d: int, edges: Iterable[Tuple[int, int]]) -> bool:
    if d <= 1:
        return True
    edges = list(edges)
    if not edges:
        return False
    rows = [i for i, _ in edges]
    cols = [j for _, j in edges]
    adjacency = coo_matrix((np.ones(len(edges)), (rows, cols)), shape=(d, d))
    n_components, _ = connected_components(adjacency, directed=False)
    return n_components == 1


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph on nodes 0..d-1, edges stored as (i, j) with i < j."""
    d: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError(f"a graph needs at least one node, got d={self.d}")
        object.__setattr__(self, 'edges', _normalize_edges(self.d, self.edges))
        if not is_connected(self.d, self.edges):
            raise ConnectivityError(f"graph on {self.d} nodes with {len(self.edges)} edges is not connected")

    def neighbors(self, i: int) -> Tuple[int, ...]:
        """Sorted neighbors of node i (excluding i)."""
        return tuple(sorted({b for a, b in self.edges if a == i} | {a for a, b in self.edges if b == i}))

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.d, self.d), dtype=int)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1
        return adj


def erdos_renyi(d: int, prob: float, seed: int) -> Graph:
    """
    Each pair joined independently with probability prob; disconnected samples
    are redrawn with seed + 1, seed + 2, ... up to ER_MAX_ATTEMPTS times.
    """
    if d < 1:
        raise ConfigurationError(f"need d >= 1, got {d}")
    if not 0 < prob <= 1:
        raise ConfigurationError(f"edge probability must lie in (0, 1], got {prob}")

    upper = np.triu_indices(d, k=1)
    for attempt in range(ER_MAX_ATTEMPTS):
        rng = np.random.default_rng(seed + attempt)
        keep = rng.random(len(upper[0])) < prob
        edges = list(zip(upper[0][keep].tolist(), upper[1][keep].tolist()))
        if is_connected(d, edges):
            if attempt > 0:
                logger.warning("ER(%d, %.3g): %d disconnected sample(s) redrawn", d, prob, attempt)
            return Graph(d, frozenset(edges))
    raise ConnectivityError(f"no connected ER graph after {ER_MAX_ATTEMPTS} attempts (d={d}, prob={prob})")


def ring(d: int) -> Graph:
    if d < 2:
        raise ConfigurationError(f"a ring needs d >= 2, got {d}")
    return Graph(d, frozenset((i, (i + 1) % d) for i in range(d)))


def complete(d: int) -> Graph:
    return Graph(d, frozenset((i, j) for i in range(d) for j in range(i + 1, d)))


def star(d: int) -> Graph:
    if d < 2:
        raise ConfigurationError(f"a star needs d >= 2, got {d}")
    return Graph(d, frozenset((0, j) for j in range(1, d)))


def save_edge_list(graph: Graph, path: str):
    """One 'i j' line per edge (0-indexed), preceded by '# agents: d'."""
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write(f"# agents: {graph.d}\n")
            for i, j in sorted(graph.edges):
                f.write(f"{i} {j}\n")
    except OSError as e:
        raise StorageError(f"cannot write edge list: {e}", path) from e


def load_edge_list(path: str, d: Optional[int] = None) -> Graph:
    """
    Read an edge list. The node count comes from d, else the '# agents:' line,
    else the largest index + 1.
    """
    if not os.path.isfile(path):
        raise IngestionError("file not found", path=path)
    try:
        with open(path, encoding='utf-8') as f:
            lines = f.readlines()
    except UnicodeDecodeError as e:
        raise IngestionError(f"not valid UTF-8 text: {e.reason} at byte {e.start}", path=path) from e
    except OSError as e:
        raise IngestionError(f"cannot read file: {e}", path=path) from e

    declared = None
    edges = []
    for line_no, line in enumerate(lines, 1):
        text = line.strip()
        if not text:
            continue
        if text.startswith('#'):
            body = text[1:].strip()
            if body.startswith('agents:'):
                try:
                    declared = int(body.split(':', 1)[1])
                except ValueError:
                    raise IngestionError("bad agent count", path=path, row=line_no) from None
            continue
        parts = text.split()
        if len(parts) != 2:
            raise IngestionError(f"expected 'i j', found {text!r}", path=path, row=line_no)
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise IngestionError(f"non-integer node in {text!r}", path=path, row=line_no) from None

    if d is None:
        d = declared if declared is not None else 1 + max((max(e) for e in edges), default=0)
    return Graph(d, frozenset(edges))
