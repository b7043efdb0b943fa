import numpy as np
import pytest

from src.network.mixing import metropolis_weights
from src.network.topology import complete, ring
from src.problem.sparse_pca import SparsePcaData, generate_gaussian_data, partition_columns, sparse_pca_problem


def planted_data(n: int, m: int, d: int, eigenvalues, mu: float = 0.0, seed: int = 0) -> SparsePcaData:
    """A = U diag(sqrt(eigenvalues)) V^T, so A A^T has exactly the given spectrum with eigenvectors U."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((m, n)))
    A = U @ np.diag(np.sqrt(np.asarray(eigenvalues, dtype=float))) @ V.T
    return SparsePcaData(A, partition_columns(m, d), mu)


def scaled_gaussian_data(n: int, m: int, d: int, mu: float, seed: int, scale: float) -> SparsePcaData:
    data = generate_gaussian_data(n, m, d, mu, seed)
    return SparsePcaData(scale * data.A, data.partitions, mu)


def top_subspace(A: np.ndarray, p: int) -> np.ndarray:
    U, _, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, :p]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def planted_pca():
    """Pure PCA (mu = 0) on n=10 with a clear gap after the third eigenvalue, split over 4 agents."""
    eigenvalues = [4.0, 3.0, 2.0, 0.25, 0.2, 0.15, 0.1, 0.05, 0.02, 0.01]
    return planted_data(10, 40, 4, eigenvalues, mu=0.0, seed=7)


@pytest.fixture
def small_l1_problem():
    """d=4, n=5, p=2 sparse PCA with the l1 regularizer and well-scaled data."""
    data = scaled_gaussian_data(5, 16, 4, 0.2, seed=3, scale=0.5)
    return sparse_pca_problem(data, 'l1', 2)


@pytest.fixture
def ring4():
    return metropolis_weights(ring(4))


@pytest.fixture
def complete4():
    return metropolis_weights(complete(4))
