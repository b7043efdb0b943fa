"""
Decentralized sparse PCA: data generation, CSV ingestion, column
partitioning across agents, and the per-agent (f_i, g_i) construction

    f_i(X) = -tr(X^T A_i A_i^T X) / 2,    g_i(X) = mu * r(X) / d.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.errors import ConfigurationError, DimensionError, IngestionError
from src.problem.objective import DecentralizedProblem, LocalSmooth
from src.smoothing.moreau import Regularizer, RegularizerKind
from src.storage.matrix_csv import load_matrix_csv

logger = logging.getLogger(__name__)

POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_ITERS = 10000


@dataclass(frozen=True, eq=False)
class SparsePcaData:
    """Global data matrix A (n features x m samples) split column-wise over agents."""
    A: np.ndarray
    partitions: Tuple[Tuple[int, int], ...]
    mu: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'partitions', tuple((int(a), int(b)) for a, b in self.partitions))
        if A.ndim != 2:
            raise DimensionError(f"data matrix must be 2-D, got shape {A.shape}")
        if self.mu < 0:
            raise ConfigurationError(f"mu must be >= 0, got {self.mu}")
        if not self.partitions:
            raise ConfigurationError("at least one partition is required")
        expected_start = 0
        for start, stop in self.partitions:
            if start != expected_start:
                raise ConfigurationError(f"partitions must be ordered and contiguous; expected start {expected_start}, got {start}")
            if stop <= start:
                raise ConfigurationError(f"empty partition [{start}, {stop})")
            expected_start = stop
        if expected_start != A.shape[1]:
            raise ConfigurationError(f"partitions cover [0, {expected_start}) but A has {A.shape[1]} columns")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return len(self.partitions)

    def local_block(self, i: int) -> np.ndarray:
        start, stop = self.partitions[i]
        return self.A[:, start:stop]


def partition_columns(m: int, d: int) -> Tuple[Tuple[int, int], ...]:
    """
    Near-equal contiguous column ranges; the first m mod d agents take one extra column.
    """
    if d < 1:
        raise ConfigurationError(f"need at least one agent, got d={d}")
    if m < d:
        raise ConfigurationError(f"cannot give {d} agents at least one column each from m={m} columns")
    base, extra = divmod(m, d)
    ranges: List[Tuple[int, int]] = []
    start = 0
    for i in range(d):
        size = base + (1 if i < extra else 0)
        ranges.append((start, start + size))
        start += size
    return tuple(ranges)


def generate_gaussian_data(n: int, m: int, d: int, mu: float, seed: int) -> SparsePcaData:
    """Seeded i.i.d. standard Gaussian n x m data, columns split over d agents."""
    partitions = partition_columns(m, d)
    rng = np.random.default_rng(seed)
    return SparsePcaData(rng.standard_normal((n, m)), partitions, mu)


def load_data_csv(path: str, d: int, mu: float, header: bool = False,
                  p: Optional[int] = None) -> SparsePcaData:
    """
    Load a features x samples CSV and split its columns over d agents.

    Args:
        p: when given, the file must have at least p feature rows

    Raises:
        IngestionError for unreadable, ragged or non-numeric files, m < d or n < p
    """
    A = load_matrix_csv(path, header=header)
    if p is not None and A.shape[0] < p:
        raise IngestionError(f"only {A.shape[0]} feature rows for p={p} components", path=path)
    if A.shape[1] < d:
        raise IngestionError(f"only {A.shape[1]} sample columns for {d} agents", path=path)
    return SparsePcaData(A, partition_columns(A.shape[1], d), mu)


def largest_eigenvalue(C: np.ndarray, tol: float = POWER_ITERATION_TOL,
                       max_iters: int = POWER_ITERATION_MAX_ITERS, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    C = np.asarray(C, dtype=float)
    if not np.any(C):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(C.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iters):
        y = C @ x
        y_norm = np.linalg.norm(y)
        if y_norm == 0:
            x = rng.standard_normal(C.shape[0])
            x /= np.linalg.norm(x)
            continue
        lam_new = float(x @ y)
        x = y / y_norm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    else:
        logger.warning("power iteration hit %d iterations (last estimate %.6g)", max_iters, lam)
    return lam


def _pca_loss(A_i: np.ndarray) -> LocalSmooth:
    C = A_i @ A_i.T
    lipschitz = largest_eigenvalue(C)

    def value(X: np.ndarray) -> float:
        return -0.5 * float(np.sum(X * (C @ X)))

    def grad(X: np.ndarray) -> np.ndarray:
        return -(C @ X)

    def grad_bound(radius: float) -> float:
        return lipschitz * radius

    return LocalSmooth(value, grad, lipschitz, grad_bound)


def sparse_pca_problem(data: SparsePcaData, reg_kind: str, p: int) -> DecentralizedProblem:
    """
    Build the decentralized sparse-PCA instance for p components.

    Each agent gets f_i(X) = -tr(X^T A_i A_i^T X) / 2 with L_{f_i} = ||A_i A_i^T||_2
    and the regularizer mu * r / d (r = ||.||_1 or ||.||_{2,1}).
    """
    kind = RegularizerKind(reg_kind)
    if kind == RegularizerKind.CUSTOM:
        raise ConfigurationError("sparse PCA supports l1 and l21 regularizers only")
    if p < 1 or data.n < p:
        raise DimensionError(f"need n >= p >= 1, got n={data.n}, p={p}")

    weight = data.mu / data.d
    agents = []
    for i in range(data.d):
        agents.append((_pca_loss(data.local_block(i)), Regularizer.of_kind(kind.value, weight, data.n, p)))
    problem = DecentralizedProblem(tuple(agents), data.n, p)
    logger.debug("sparse PCA instance: n=%d, p=%d, d=%d, L_f=%.6g, L_g=%.6g",
                 data.n, p, data.d, problem.L_f, problem.L_g)
    return problem
