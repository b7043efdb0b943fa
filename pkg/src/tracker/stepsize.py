"""
Safeguarded Barzilai-Borwein stepsizes from an agent's own secant pair.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

BB_DENOMINATOR_FLOOR = 1e-18


def bb_stepsize(X_prev: np.ndarray, X_curr: np.ndarray, H_prev: np.ndarray, H_curr: np.ndarray,
                k: int, previous: float, eta_min: float, eta_max: float) -> float:
    """
    Alternating BB stepsize with S = X_curr - X_prev, V = H_curr - H_prev.

    Odd k uses BB1 = |<S,S> / <S,V>|, even k uses BB2 = |<S,V> / <V,V>|.
    The result is clamped to [eta_min, eta_max]; when the denominator is
    below BB_DENOMINATOR_FLOOR in magnitude, `previous` is returned unchanged.

    Args:
        X_prev, X_curr: agent iterates at rounds k-1 and k
        H_prev, H_curr: agent descent directions at rounds k-1 and k
        k: current round
        previous: stepsize used at round k-1
        eta_min, eta_max: safeguard interval
    """
    S = X_curr - X_prev
    V = H_curr - H_prev
    sv = float(np.sum(S * V))
    if k % 2 == 1:
        numerator, denominator = float(np.sum(S * S)), sv
    else:
        numerator, denominator = sv, float(np.sum(V * V))

    if abs(denominator) < BB_DENOMINATOR_FLOOR:
        logger.debug("BB denominator %.3e at k=%d; keeping stepsize %.3e", denominator, k, previous)
        return previous
    return float(np.clip(abs(numerator / denominator), eta_min, eta_max))


def initial_stepsize(bb_initial: float, eta_min: float, eta_max: float) -> float:
    return float(np.clip(bb_initial, eta_min, eta_max))
