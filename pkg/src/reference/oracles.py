"""
Brute-force test oracles. Exponential in the number of entries; meant for
matrices with at most four entries.
"""

import itertools

import numpy as np

from src.errors import OracleScaleError, ParameterError
from src.smoothing.moreau import Regularizer, RegularizerKind

MAX_ORACLE_ENTRIES = 4
MAX_GRID_POINTS = 5_000_000


def _batch_value(g: Regularizer, Y: np.ndarray) -> np.ndarray:
    """g over a batch of candidates Y with shape (batch, n, p)."""
    if g.kind == RegularizerKind.L1:
        return g.weight * np.abs(Y).sum(axis=(1, 2))
    if g.kind == RegularizerKind.L21:
        return g.weight * np.linalg.norm(Y, axis=2).sum(axis=1)
    return np.array([g.value_fn(y) for y in Y])


def brute_force_prox(g: Regularizer, sigma: float, X, grid_radius: float = 5.0, grid_steps: int = 2001) -> np.ndarray:
    """
    Grid minimizer of g(Y) + ||Y - X||_F^2 / (2 sigma).

    Every entry ranges over grid_steps equally spaced points in
    [x - grid_radius, x + grid_radius]; accuracy is one grid step,
    2 grid_radius / (grid_steps - 1).

    Raises:
        OracleScaleError: more than four entries, or too many grid points
    """
    if not sigma > 0:
        raise ParameterError(f"smoothing parameter must be positive, got {sigma}")
    if grid_steps < 2:
        raise ParameterError(f"grid_steps must be >= 2, got {grid_steps}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    entries = X.size
    if entries > MAX_ORACLE_ENTRIES:
        raise OracleScaleError(f"brute-force prox handles at most {MAX_ORACLE_ENTRIES} entries, got {entries}")
    if float(grid_steps) ** entries > MAX_GRID_POINTS:
        raise OracleScaleError(f"{grid_steps}^{entries} grid points exceed the limit of {MAX_GRID_POINTS}")

    offsets = np.linspace(-grid_radius, grid_radius, grid_steps)
    flat = X.ravel()
    axes = [x + offsets for x in flat]

    # outer entries are enumerated, the last one is vectorized
    best_Y, best_value = None, np.inf
    for prefix in itertools.product(*axes[:-1]):
        Y = np.empty((grid_steps, entries))
        Y[:, :-1] = prefix
        Y[:, -1] = axes[-1]
        values = _batch_value(g, Y.reshape(grid_steps, *X.shape)) + ((Y - flat) ** 2).sum(axis=1) / (2.0 * sigma)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best_value = values[idx]
            best_Y = Y[idx].copy()
    return best_Y.reshape(X.shape)
