import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.errors import DimensionError, SingularityError
from src.manifold.stiefel import feasibility, proj_tangent, random_stiefel, retract, sym


def test_sym_of_identity_is_identity():
    assert_array_equal(sym(np.eye(3)), np.eye(3))


def test_sym_of_upper_triangular_example():
    assert_array_equal(sym(np.array([[0.0, 2.0], [0.0, 0.0]])), np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_sym_matches_entrywise_loop(rng):
    B = rng.standard_normal((3, 3))
    expected = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            expected[i, j] = 0.5 * (B[i, j] + B[j, i])
    assert_allclose(sym(B), expected, atol=1e-15)
    assert_array_equal(sym(B), sym(B).T)


def test_sym_rejects_non_square():
    with pytest.raises(DimensionError):
        sym(np.ones((2, 3)))


def test_proj_tangent_of_point_itself_is_zero():
    X = random_stiefel(6, 3, 1).value
    assert_allclose(proj_tangent(X, X), 0.0, atol=1e-14)


def test_proj_tangent_of_zero_is_zero():
    X = random_stiefel(6, 3, 1).value
    assert_array_equal(proj_tangent(X, np.zeros((6, 3))), np.zeros((6, 3)))


def test_proj_tangent_output_is_tangent(rng):
    X = random_stiefel(10, 3, 2).value
    Z = proj_tangent(X, rng.standard_normal((10, 3)))
    assert np.max(np.abs(sym(X.T @ Z))) <= 1e-12


def test_proj_tangent_shape_mismatch():
    with pytest.raises(DimensionError):
        proj_tangent(np.ones((4, 2)), np.ones((4, 3)))


def test_proj_tangent_is_linear(rng):
    X = rng.standard_normal((7, 2))
    Y1, Y2 = rng.standard_normal((7, 2)), rng.standard_normal((7, 2))
    a, b = 1.7, -0.3
    assert_allclose(proj_tangent(X, a * Y1 + b * Y2), a * proj_tangent(X, Y1) + b * proj_tangent(X, Y2), atol=1e-12)


def test_proj_tangent_is_idempotent_at_feasible_points(rng):
    X = random_stiefel(8, 3, 5).value
    P = proj_tangent(X, rng.standard_normal((8, 3)))
    assert_allclose(proj_tangent(X, P), P, atol=1e-10)


def test_feasibility_of_orthonormal_matrix():
    assert feasibility(random_stiefel(10, 3, 0).value) <= 1e-14


def test_feasibility_of_scaled_unit_vector():
    x = random_stiefel(5, 1, 0).value
    assert feasibility(2.0 * x) == pytest.approx(3.0, abs=1e-12)


def test_feasibility_matches_double_loop(rng):
    X = rng.standard_normal((10, 3))
    total = 0.0
    for a in range(3):
        for b in range(3):
            gram = sum(X[r, a] * X[r, b] for r in range(10))
            total += (gram - (1.0 if a == b else 0.0)) ** 2
    assert feasibility(X) == pytest.approx(np.sqrt(total), rel=1e-12)


def test_retract_fixes_orthonormal_points():
    X = random_stiefel(9, 4, 3).value
    assert_allclose(retract(X).value, X, atol=1e-12)


@pytest.mark.parametrize("c", [0.01, 0.5, 3.0, 1e4])
def test_retract_is_scale_invariant(c):
    X = random_stiefel(6, 2, 4).value
    assert_allclose(retract(c * X).value, X, atol=1e-12)


def test_retract_is_nearest_point_for_unit_circle(rng):
    x = rng.standard_normal((2, 1))
    angles = np.linspace(0.0, 2.0 * np.pi, 200001)
    candidates = np.stack([np.cos(angles), np.sin(angles)])
    best = candidates[:, np.argmin(np.linalg.norm(candidates - x, axis=0))]
    assert_allclose(retract(x).value[:, 0], best, atol=2.0 * np.pi / 200000)


def test_retract_feasibility_and_idempotence(rng):
    for _ in range(20):
        Q = retract(rng.standard_normal((10, 3))).value
        assert feasibility(Q) <= 1e-12
        assert_allclose(retract(Q).value, Q, atol=1e-10)


def test_retract_rank_deficient_raises():
    X = np.ones((4, 2))
    with pytest.raises(SingularityError):
        retract(X)


def test_retract_wide_matrix_raises():
    with pytest.raises(DimensionError):
        retract(np.ones((2, 3)))


@pytest.mark.parametrize("seed", [0, 1, 17, 123])
def test_random_stiefel_is_feasible(seed):
    point = random_stiefel(10, 3, seed)
    assert (point.n, point.p) == (10, 3)
    assert feasibility(point.value) <= 1e-12


def test_random_stiefel_square_is_orthogonal():
    Q = random_stiefel(5, 5, 9).value
    assert_allclose(Q @ Q.T, np.eye(5), atol=1e-12)


def test_random_stiefel_is_deterministic():
    assert_array_equal(random_stiefel(7, 2, 42).value, random_stiefel(7, 2, 42).value)


def test_random_stiefel_rejects_p_above_n():
    with pytest.raises(DimensionError):
        random_stiefel(2, 3, 0)
