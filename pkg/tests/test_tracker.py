from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import subspace_angles

from src.errors import DivergenceError, ParameterError
from src.manifold.stiefel import feasibility, proj_tangent, random_stiefel
from src.metrics.records import RateMonitor
from src.network.mixing import MixingMatrix, metropolis_weights
from src.network.topology import complete, ring
from src.problem.sparse_pca import SparsePcaData, generate_gaussian_data, sparse_pca_problem
from src.smoothing.moreau import SigmaSchedule, env_value
from src.tracker.bounds import (condition1_bounds, eta_upper_bound, gradient_ball_radius, penalty_constant,
                                smoothness_constant)
from src.tracker.directions import (approximate_riemannian_gradient, descent_direction, direction_from_gradient,
                                    local_gradient)
from src.tracker.stepsize import bb_stepsize, initial_stepsize
from src.tracker.thanos import SolverConfig, initialize_states, run, step

from tests.conftest import scaled_gaussian_data, top_subspace


def _fd_gradient(fn, X, h=1e-6):
    grad = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        E = np.zeros_like(X)
        E[idx] = h
        grad[idx] = (fn(X + E) - fn(X - E)) / (2 * h)
    return grad


# directions

def test_local_gradient_without_regularizer_is_smooth_gradient(rng):
    problem = sparse_pca_problem(generate_gaussian_data(5, 12, 3, 0.0, 1), 'l1', 2)
    X = rng.standard_normal((5, 2))
    for i in range(3):
        assert_array_equal(local_gradient(problem, i, X, 0.3), problem.smooth(i).grad(X))


def test_local_gradient_at_origin_is_zero(small_l1_problem):
    assert_array_equal(local_gradient(small_l1_problem, 0, np.zeros((5, 2)), 0.5), np.zeros((5, 2)))


def test_local_gradient_matches_finite_differences(small_l1_problem, rng):
    sigma = 0.7
    checked = 0
    while checked < 10:
        X = rng.standard_normal((5, 2))
        t = sigma * small_l1_problem.regularizer(0).weight
        if np.any(np.abs(np.abs(X) - t) <= 1e-3):
            continue
        f, g = small_l1_problem.agents[checked % 4]
        fd = _fd_gradient(lambda Y: f.value(Y) + env_value(g, sigma, Y), X)
        grad = local_gradient(small_l1_problem, checked % 4, X, sigma)
        assert np.linalg.norm(fd - grad) <= 1e-4 * max(1.0, np.linalg.norm(grad))
        checked += 1


def test_direction_vanishes_at_feasible_point_with_zero_gradient():
    X = random_stiefel(6, 2, 0).value
    assert_allclose(direction_from_gradient(X, np.zeros((6, 2)), 3.0), 0.0, atol=1e-15)


@pytest.mark.parametrize("beta", [0.1, 1.0, 25.0])
def test_direction_is_tangent_projection_at_feasible_points(small_l1_problem, beta):
    X = random_stiefel(5, 2, 11).value
    for i in range(small_l1_problem.d):
        G = local_gradient(small_l1_problem, i, X, 0.4)
        assert_allclose(descent_direction(small_l1_problem, i, X, 0.4, beta), proj_tangent(X, G), atol=1e-12)


def test_direction_terms_at_infeasible_point(rng):
    X = rng.standard_normal((6, 3))
    G = rng.standard_normal((6, 3))
    beta = 2.5
    gram = np.einsum('ki,kj->ij', X, X)
    xtg = np.einsum('ki,kj->ij', X, G)
    R = 0.5 * np.einsum('ik,kj->ij', G, 3 * np.eye(3) - gram) - np.einsum('ik,kj->ij', X, 0.5 * (xtg + xtg.T))
    penalty = beta * np.einsum('ik,kj->ij', X, gram - np.eye(3))
    assert_allclose(approximate_riemannian_gradient(X, G), R, atol=1e-12)
    assert_allclose(direction_from_gradient(X, G, beta), penalty + R, atol=1e-12)


def test_direction_rejects_nonpositive_beta(small_l1_problem):
    with pytest.raises(ParameterError):
        descent_direction(small_l1_problem, 0, np.ones((5, 2)), 0.5, 0.0)


# BB stepsize

def test_bb_unit_curvature(rng):
    X0, X1 = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
    H0 = rng.standard_normal((4, 2))
    H1 = H0 + (X1 - X0)
    for k in (1, 2):
        assert bb_stepsize(X0, X1, H0, H1, k, 0.3, 1e-6, 10.0) == pytest.approx(1.0)
    assert bb_stepsize(X0, X1, H0, H1, 1, 0.3, 1e-6, 0.5) == 0.5


def test_bb_double_curvature(rng):
    X0, X1 = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
    H0 = np.zeros((4, 2))
    H1 = 2.0 * (X1 - X0)
    assert bb_stepsize(X0, X1, H0, H1, 1, 0.3, 1e-6, 1.0) == pytest.approx(0.5)
    assert bb_stepsize(X0, X1, H0, H1, 2, 0.3, 1e-6, 1.0) == pytest.approx(0.5)


def test_bb_orthogonal_secant_keeps_previous():
    X0, X1 = np.zeros((2, 1)), np.array([[1.0], [0.0]])
    H0, H1 = np.zeros((2, 1)), np.array([[0.0], [1.0]])
    assert bb_stepsize(X0, X1, H0, H1, 1, 0.123, 1e-6, 1.0) == 0.123


def test_bb_clamps_small_steps():
    X0, X1 = np.zeros((1, 1)), np.array([[1.0]])
    H0, H1 = np.zeros((1, 1)), np.array([[1e9]])
    assert bb_stepsize(X0, X1, H0, H1, 2, 0.1, 1e-6, 1.0) == 1e-6


def test_initial_stepsize_is_clamped():
    assert initial_stepsize(1e-3, 1e-6, 1.0) == 1e-3
    assert initial_stepsize(5.0, 1e-6, 1.0) == 1.0


# convergence bounds

def test_bound_formulas_by_substitution():
    assert smoothness_constant(0.0, 1.0, 1, 1) == 16
    assert penalty_constant(1.0, 0.0, 1, 1) == pytest.approx(8.0)
    assert gradient_ball_radius(1, 1) == pytest.approx(np.sqrt(7 / 6) + 1)


def test_eta_upper_decreases_as_lambda_grows():
    values = [eta_upper_bound(16.0, 100.0, lam, 4, 2) for lam in (0.0, 0.3, 0.6, 0.9, 0.99)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert all(v > 0 for v in values)


def test_convergence_bounds_on_zero_data_single_agent():
    data = SparsePcaData(np.zeros((1, 1)), ((0, 1),), 0.0)
    problem = sparse_pca_problem(data, 'l1', 1)
    bounds = condition1_bounds(problem, 1.0, MixingMatrix.single_agent())
    assert bounds.L_r == 16
    assert bounds.M_f == 0.0 and bounds.mf_exact
    assert bounds.eta_upper > 0
    assert bounds.beta_lower == pytest.approx(max(6 / 5, 72 * 4 / 5, 1 / 13, 22.0))


def test_complete_graph_allows_larger_steps_than_ring():
    problem = sparse_pca_problem(generate_gaussian_data(4, 8, 4, 0.1, 0), 'l1', 1)
    ring_bounds = condition1_bounds(problem, 0.5, metropolis_weights(ring(4)))
    complete_bounds = condition1_bounds(problem, 0.5, metropolis_weights(complete(4)))
    assert ring_bounds.lam == pytest.approx(1 / 3)
    assert complete_bounds.eta_upper > ring_bounds.eta_upper
    assert all(np.isfinite(v) and v >= 0 for v in complete_bounds.to_dict().values() if isinstance(v, float))


def test_bounds_check_flags():
    problem = sparse_pca_problem(generate_gaussian_data(4, 8, 2, 0.1, 0), 'l1', 1)
    bounds = condition1_bounds(problem, 0.5, metropolis_weights(complete(2)))
    assert bounds.check(1.0, 0.1) == (False, False)
    beta = 2 * bounds.beta_lower
    assert bounds.check(beta, None) == (True, None)
    assert bounds.check(beta, 0.5 * bounds.eta_upper_at(beta)) == (True, True)


def test_sampled_gradient_sup_for_custom_losses():
    from src.problem.objective import DecentralizedProblem, LocalSmooth
    from src.smoothing.moreau import Regularizer

    f = LocalSmooth(lambda X: float(np.sum(X ** 2)), lambda X: 2 * X, lipschitz=2.0)
    problem = DecentralizedProblem.from_pairs([(f, Regularizer.l1(0.1, 3, 1))], n=3, p=1)
    bounds = condition1_bounds(problem, 1.0, MixingMatrix.single_agent(), samples=50)
    assert not bounds.mf_exact
    assert bounds.M_f == pytest.approx(2 * gradient_ball_radius(1, 1))


# solver loop

def test_solver_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(eta=-1.0)
    with pytest.raises(ParameterError):
        SolverConfig(eta='adaptive')
    with pytest.raises(ParameterError):
        SolverConfig(beta=0.0)
    with pytest.raises(ParameterError):
        SolverConfig(eta_min=1.0, eta_max=0.1)
    assert SolverConfig().uses_bb


def test_initial_states_share_x_and_track_h(small_l1_problem):
    X0 = random_stiefel(5, 2, 1).value
    states = initialize_states(small_l1_problem, X0, SolverConfig(eta=0.01, sigma_schedule=SigmaSchedule.fixed(0.3)))
    for i, s in enumerate(states):
        assert s.agent_id == i
        assert_array_equal(s.X, X0)
        assert_array_equal(s.D, s.H)
        assert_array_equal(s.H, descent_direction(small_l1_problem, i, X0, 0.3, 1.0))


def test_zero_iterations_return_initial_states(small_l1_problem, ring4):
    X0 = random_stiefel(5, 2, 1).value
    result = run(small_l1_problem, ring4, SolverConfig(eta=0.01, max_iters=0), X0)
    assert result.records == [] and result.iterations == 0
    assert all(np.array_equal(s.X, X0) for s in result.states)


def test_tracking_average_identity():
    data = scaled_gaussian_data(6, 40, 8, 0.3, seed=9, scale=0.4)
    problem = sparse_pca_problem(data, 'l1', 2)
    mixing = metropolis_weights(ring(8))
    config = SolverConfig(eta=1e-2, sigma_schedule=SigmaSchedule.power(1.0), max_iters=200)
    gaps = []

    def observe(k, states):
        mean_D = np.mean([s.D for s in states], axis=0)
        mean_H = np.mean([s.H for s in states], axis=0)
        gaps.append(np.max(np.abs(mean_D - mean_H)))

    run(problem, mixing, config, random_stiefel(6, 2, 4).value, on_iterate=observe)
    assert len(gaps) == 201
    assert max(gaps) <= 1e-10


@pytest.mark.parametrize("eta", [0.01, 'bb'])
def test_single_agent_matches_centralized_loop(eta):
    data = scaled_gaussian_data(5, 12, 1, 0.2, seed=5, scale=0.5)
    problem = sparse_pca_problem(data, 'l21', 2)
    config = SolverConfig(eta=eta, sigma_schedule=SigmaSchedule.fixed(0.2), max_iters=500)
    X0 = random_stiefel(5, 2, 6).value
    result = run(problem, MixingMatrix.single_agent(), config, X0)

    X = X0.copy()
    H = descent_direction(problem, 0, X, 0.2, 1.0)
    D = H.copy()
    step_size = initial_stepsize(config.bb_initial, config.eta_min, config.eta_max) if eta == 'bb' else eta
    X_prev = H_prev = None
    for k in range(500):
        if eta == 'bb' and X_prev is not None:
            step_size = bb_stepsize(X_prev, X, H_prev, H, k, step_size, config.eta_min, config.eta_max)
        X_prev, H_prev = X, H
        X = X - step_size * D
        H = descent_direction(problem, 0, X, 0.2, 1.0)
        D = D + H - H_prev

    assert_allclose(result.states[0].X, X, atol=1e-12)
    assert_allclose(result.states[0].D, result.states[0].H, atol=1e-12)


def test_complete_graph_keeps_agents_identical(small_l1_problem, complete4):
    config = SolverConfig(eta=0.01, sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=50)
    result = run(small_l1_problem, complete4, config, random_stiefel(5, 2, 2).value)
    for s in result.states[1:]:
        assert_array_equal(s.X, result.states[0].X)


def test_step_is_identical_on_an_executor(small_l1_problem, ring4):
    config = SolverConfig(eta='bb', sigma_schedule=SigmaSchedule.power(), max_iters=30)
    X0 = random_stiefel(5, 2, 8).value
    serial = run(small_l1_problem, ring4, config, X0)
    with ThreadPoolExecutor(max_workers=3) as executor:
        threaded = run(small_l1_problem, ring4, config, X0, executor=executor)
    for a, b in zip(serial.states, threaded.states):
        assert_array_equal(a.X, b.X)
        assert_array_equal(a.D, b.D)
    assert [r.to_dict() for r in serial.records] == [r.to_dict() for r in threaded.records]


def test_relabeling_agents_permutes_states(small_l1_problem):
    from src.network.topology import Graph
    from src.problem.objective import DecentralizedProblem

    graph = Graph(4, frozenset({(0, 1), (1, 2), (2, 3), (0, 2)}))
    perm = [2, 0, 3, 1]
    inverse = np.argsort(perm)
    permuted_graph = Graph(4, frozenset((int(inverse[i]), int(inverse[j])) for i, j in graph.edges))
    problem_perm = DecentralizedProblem.from_pairs([small_l1_problem.agents[j] for j in perm], 5, 2)

    config = SolverConfig(eta=0.01, sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=40)
    X0 = random_stiefel(5, 2, 3).value
    base = run(small_l1_problem, metropolis_weights(graph), config, X0)
    relabeled = run(problem_perm, metropolis_weights(permuted_graph), config, X0)
    for new_id, old_id in enumerate(perm):
        assert_allclose(relabeled.states[new_id].X, base.states[old_id].X, atol=1e-12)
        assert_allclose(relabeled.states[new_id].D, base.states[old_id].D, atol=1e-12)


def test_records_are_numbered_from_one(small_l1_problem, ring4):
    config = SolverConfig(eta=0.01, sigma_schedule=SigmaSchedule.power(), max_iters=5)
    result = run(small_l1_problem, ring4, config, random_stiefel(5, 2, 1).value)
    assert [r.k for r in result.records] == [1, 2, 3, 4, 5]
    assert result.records[-1].sigma == pytest.approx(5 ** (-1 / 3))
    assert all(r.dist is None and r.eta == pytest.approx(0.01) for r in result.records)


def test_bb_records_stay_inside_safeguards(small_l1_problem, ring4):
    config = SolverConfig(eta='bb', sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=40, eta_min=1e-4, eta_max=0.05)
    result = run(small_l1_problem, ring4, config, random_stiefel(5, 2, 1).value)
    assert all(1e-4 - 1e-15 <= r.eta <= 0.05 + 1e-15 for r in result.records)
    assert all(1e-4 <= s.eta <= 0.05 for s in result.states)


def test_stop_tolerance_ends_run_early(planted_pca, complete4):
    problem = sparse_pca_problem(planted_pca, 'l1', 3)
    config = SolverConfig(eta=0.05, sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=5000, stop_tol=1e-6)
    result = run(problem, complete4, config, random_stiefel(10, 3, 2).value)
    assert result.converged
    assert result.iterations < 5000
    assert result.records[-1].stat_residual <= 1e-6


def test_divergence_reports_round_and_partial_records(small_l1_problem, ring4):
    collected = []
    config = SolverConfig(eta=1e6, sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=100)
    with np.errstate(all='ignore'):
        with pytest.raises(DivergenceError) as excinfo:
            run(small_l1_problem, ring4, config, random_stiefel(5, 2, 1).value, on_record=collected.append)
    error = excinfo.value
    assert error.k >= 1 and 0 <= error.agent_id < 4
    assert len(error.records) == error.k - 1
    assert [r.k for r in collected] == [r.k for r in error.records]


@pytest.mark.parametrize("graph", ['ring', 'single'])
def test_pure_pca_recovers_leading_subspace(planted_pca, graph):
    if graph == 'single':
        data = SparsePcaData(planted_pca.A, ((0, planted_pca.m),), 0.0)
        mixing = MixingMatrix.single_agent()
    else:
        data = planted_pca
        mixing = metropolis_weights(ring(4))
    problem = sparse_pca_problem(data, 'l1', 3)
    eta = 0.02 if graph == 'ring' else 0.02 / 4
    config = SolverConfig(eta=eta, sigma_schedule=SigmaSchedule.fixed(0.1), max_iters=5000)
    result = run(problem, mixing, config, random_stiefel(10, 3, 1).value)

    X_bar = np.mean([s.X for s in result.states], axis=0)
    angles = subspace_angles(X_bar, top_subspace(data.A, 3))
    assert np.max(angles) <= 1e-3
    assert feasibility(X_bar) <= 1e-6


def test_rate_quantities_decay_like_one_over_k():
    data = scaled_gaussian_data(4, 8, 2, 0.1, seed=13, scale=0.5)
    problem = sparse_pca_problem(data, 'l1', 1)
    sigma = 0.5
    mixing = metropolis_weights(complete(2))
    # the guaranteed stepsize sums to < 1e-4 over all 16000 rounds
    bounds = condition1_bounds(problem, sigma, mixing)
    assert bounds.eta_upper * 16000 < 1e-4
    assert bounds.check(1.0, 0.05) == (False, False)

    monitor = RateMonitor(problem, sigma)
    config = SolverConfig(eta=0.05, sigma_schedule=SigmaSchedule.fixed(sigma), max_iters=16000)
    run(problem, mixing, config, random_stiefel(4, 1, 0).value,
        on_iterate=lambda k, states: monitor.observe([s.X for s in states]))

    floor = 1e-20
    for quantity in (0, 1):
        minima = [monitor.minima(K)[quantity] for K in (1000, 4000, 16000)]
        for previous, current in zip(minima, minima[1:]):
            assert current <= max(0.5 * previous, floor)
    residual_sq, feas_sq = monitor.minima(16000)
    assert residual_sq <= 1e-8 and feas_sq <= 1e-8


def test_step_keeps_shapes_and_agent_order(small_l1_problem, ring4):
    config = SolverConfig(eta=0.01, sigma_schedule=SigmaSchedule.fixed(0.5), max_iters=1)
    states = initialize_states(small_l1_problem, random_stiefel(5, 2, 0).value, config)
    new_states = step(states, small_l1_problem, ring4, config, 0)
    assert [s.agent_id for s in new_states] == [0, 1, 2, 3]
    for s in new_states:
        assert s.X.shape == s.D.shape == s.H.shape == (5, 2)
        assert s.eta == 0.01
