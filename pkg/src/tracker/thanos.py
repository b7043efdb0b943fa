"""
Decentralized smoothing gradient tracking over the Stiefel manifold (THANOS).

Each round k -> k+1, every agent i
    X_i <- sum_j W(i,j) (X_j - eta_j D_j)                (consensus + descent)
    H_i <- beta X_i (X_i^T X_i - I) + R_i(X_i)           (sigma of round k+1)
    D_i <- sum_j W(i,j) D_j + H_i(new) - H_i(old)        (gradient tracking)

Rounds are double-buffered: a step reads only round-k states and returns new
round-(k+1) states.
"""

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from src.config import DEFAULT_BB_INITIAL, DEFAULT_BETA, DEFAULT_ETA_MAX, DEFAULT_ETA_MIN
from src.errors import DivergenceError, ParameterError
from src.metrics.records import RunRecord, record
from src.network.mixing import MixingMatrix, mix
from src.problem.objective import DecentralizedProblem
from src.smoothing.moreau import SigmaSchedule, sigma_at
from src.tracker.directions import descent_direction
from src.tracker.stepsize import bb_stepsize, initial_stepsize

logger = logging.getLogger(__name__)

BB = 'bb'


@dataclass(frozen=True, eq=False)
class AgentState:
    """Round-k state of one agent: iterate X, tracker D, direction H, last stepsize eta."""
    X: np.ndarray
    D: np.ndarray
    H: np.ndarray
    agent_id: int
    eta: float = 0.0


@dataclass(frozen=True)
class SolverConfig:
    eta: Union[float, str] = BB
    beta: float = DEFAULT_BETA
    sigma_schedule: SigmaSchedule = field(default_factory=SigmaSchedule)
    max_iters: int = 1000
    stop_tol: float = 0.0
    eta_min: float = DEFAULT_ETA_MIN
    eta_max: float = DEFAULT_ETA_MAX
    bb_initial: float = DEFAULT_BB_INITIAL
    seed: int = 0

    def __post_init__(self):
        if self.eta != BB and not (isinstance(self.eta, (int, float)) and self.eta > 0):
            raise ParameterError(f"eta must be positive or '{BB}', got {self.eta!r}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if not 0 < self.eta_min <= self.eta_max:
            raise ParameterError(f"need 0 < eta_min <= eta_max, got [{self.eta_min}, {self.eta_max}]")
        if self.max_iters < 0:
            raise ParameterError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.stop_tol < 0:
            raise ParameterError(f"stop_tol must be >= 0, got {self.stop_tol}")

    @property
    def uses_bb(self) -> bool:
        return self.eta == BB


@dataclass
class RunResult:
    states: List[AgentState]
    records: List[RunRecord]
    iterations: int
    converged: bool = False


def _map(executor: Optional[Executor], fn, items):
    if executor is None:
        return [fn(item) for item in items]
    return list(executor.map(fn, items))


def _check_finite(k: int, agent_id: int, *matrices: np.ndarray):
    for M in matrices:
        if not np.all(np.isfinite(M)):
            raise DivergenceError(k, agent_id)


def initialize_states(problem: DecentralizedProblem, X_initial: np.ndarray, config: SolverConfig,
                      executor: Optional[Executor] = None) -> List[AgentState]:
    """Every agent starts at X_initial with D_i = H_i evaluated at sigma_0."""
    X_initial = np.asarray(X_initial, dtype=float)
    problem.check_shape(X_initial)
    sigma = sigma_at(config.sigma_schedule, 0)
    eta = initial_stepsize(config.bb_initial, config.eta_min, config.eta_max) if config.uses_bb else float(config.eta)

    def build(i: int) -> AgentState:
        H = descent_direction(problem, i, X_initial, sigma, config.beta)
        _check_finite(0, i, H)
        return AgentState(X_initial.copy(), H.copy(), H, i, eta)

    return _map(executor, build, range(problem.d))


def _stepsize(config: SolverConfig, k: int, state: AgentState, previous: Optional[AgentState]) -> float:
    if not config.uses_bb:
        return float(config.eta)
    if previous is None:
        return state.eta
    return bb_stepsize(previous.X, state.X, previous.H, state.H, k, state.eta, config.eta_min, config.eta_max)


def step(states: Sequence[AgentState], problem: DecentralizedProblem, mixing: MixingMatrix, config: SolverConfig,
         k: int, previous: Optional[Sequence[AgentState]] = None, executor: Optional[Executor] = None) -> List[AgentState]:
    """
    Advance every agent from round k to round k+1.

    Args:
        states: round-k states, ordered by agent id
        problem: local objectives
        mixing: mixing matrix (only neighbor payloads are read)
        config: solver parameters
        k: current round
        previous: round-(k-1) states, used for BB secant pairs (None at k = 0)
        executor: optional pool for per-agent work; results are order-independent

    Raises:
        DivergenceError on the first non-finite entry
    """
    d = len(states)
    etas = [_stepsize(config, k, states[i], previous[i] if previous is not None else None) for i in range(d)]

    payloads = [s.X - eta * s.D for s, eta in zip(states, etas)]
    new_X = mix(mixing, payloads, executor)

    sigma_next = sigma_at(config.sigma_schedule, k + 1)
    new_H = _map(executor, lambda i: descent_direction(problem, i, new_X[i], sigma_next, config.beta), range(d))

    mixed_D = mix(mixing, [s.D for s in states], executor)
    new_states = []
    for i in range(d):
        D = mixed_D[i] + new_H[i] - states[i].H
        _check_finite(k + 1, i, new_X[i], new_H[i], D)
        new_states.append(AgentState(new_X[i], D, new_H[i], i, etas[i]))
    return new_states


def run(problem: DecentralizedProblem, mixing: MixingMatrix, config: SolverConfig, X_initial: np.ndarray,
        X_star: Optional[np.ndarray] = None, align_columns: bool = False,
        on_record: Optional[Callable[[RunRecord], None]] = None,
        on_iterate: Optional[Callable[[int, List[AgentState]], None]] = None,
        executor: Optional[Executor] = None) -> RunResult:
    """
    Run the synchronous loop for up to config.max_iters rounds.

    One RunRecord (k = 1, 2, ...) is produced per round and handed to on_record
    as soon as it exists, so a sink sees every completed round even when a
    later round diverges. The loop stops early once the stationarity residual
    of the averaged iterate drops to config.stop_tol.

    Raises:
        DivergenceError carrying the records produced so far
    """
    if problem.d != mixing.d:
        raise ParameterError(f"problem has {problem.d} agents but the mixing matrix has {mixing.d}")

    states = initialize_states(problem, X_initial, config, executor)
    if on_iterate is not None:
        on_iterate(0, states)
    records: List[RunRecord] = []
    previous = None
    converged = False
    logger.info("THANOS start: d=%d, n=%d, p=%d, K=%d, eta=%s, beta=%g, lambda=%.4f",
                problem.d, problem.n, problem.p, config.max_iters, config.eta, config.beta, mixing.lam)

    for k in range(config.max_iters):
        try:
            new_states = step(states, problem, mixing, config, k, previous, executor)
        except DivergenceError as e:
            e.records = list(records)
            logger.error("diverged at k=%d (agent %d) after %d recorded rounds", e.k, e.agent_id, len(records))
            raise
        previous, states = states, new_states

        sigma = sigma_at(config.sigma_schedule, k + 1)
        eta = float(np.mean([s.eta for s in states]))
        rec = record([s.X for s in states], problem, sigma, eta, k + 1, X_star, align_columns)
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        if on_iterate is not None:
            on_iterate(k + 1, states)
        if (k + 1) % 500 == 0:
            logger.debug("k=%d feas=%.3e consensus=%.3e residual=%.3e", k + 1, rec.feas, rec.consensus, rec.stat_residual)
        if rec.stat_residual <= config.stop_tol:
            converged = True
            break

    iterations = len(records)
    logger.info("THANOS finished after %d rounds%s", iterations, " (stop tolerance reached)" if converged else "")
    return RunResult(states, records, iterations, converged)
