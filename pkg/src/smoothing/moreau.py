"""
Moreau envelopes, proximal operators and smoothing-parameter schedules.

The library never differentiates a regularizer directly: everything goes
through prox, and the envelope gradient is (X - prox(X)) / sigma.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from src.errors import ParameterError

logger = logging.getLogger(__name__)


class RegularizerKind(str, Enum):
    L1 = 'l1'
    L21 = 'l21'
    CUSTOM = 'custom'


@dataclass(frozen=True)
class Regularizer:
    """
    Non-smooth convex term g(X) = weight * r(X).

    For CUSTOM regularizers value_fn(X) and prox_fn(sigma, X) are user
    callbacks; the weight is then informational only and already folded
    into the callbacks.
    """
    kind: RegularizerKind
    weight: float
    lipschitz: float
    value_fn: Optional[Callable[[np.ndarray], float]] = None
    prox_fn: Optional[Callable[[float, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.weight < 0:
            raise ParameterError(f"regularizer weight must be >= 0, got {self.weight}")
        if self.lipschitz < 0:
            raise ParameterError(f"Lipschitz constant must be >= 0, got {self.lipschitz}")
        if self.kind == RegularizerKind.CUSTOM and (self.value_fn is None or self.prox_fn is None):
            raise ParameterError("custom regularizers need both value_fn and prox_fn")

    @classmethod
    def l1(cls, weight: float, n: int, p: int) -> "Regularizer":
        # |  ||X||_1 - ||Y||_1 | <= ||X - Y||_1 <= sqrt(np) ||X - Y||_F
        return cls(RegularizerKind.L1, weight, weight * math.sqrt(n * p))

    @classmethod
    def l21(cls, weight: float, n: int) -> "Regularizer":
        return cls(RegularizerKind.L21, weight, weight * math.sqrt(n))

    @classmethod
    def custom(cls, value_fn, prox_fn, lipschitz: float, weight: float = 1.0) -> "Regularizer":
        return cls(RegularizerKind.CUSTOM, weight, lipschitz, value_fn, prox_fn)

    @classmethod
    def of_kind(cls, kind: str, weight: float, n: int, p: int) -> "Regularizer":
        kind = RegularizerKind(kind)
        if kind == RegularizerKind.L1:
            return cls.l1(weight, n, p)
        if kind == RegularizerKind.L21:
            return cls.l21(weight, n)
        raise ParameterError("custom regularizers must be built with Regularizer.custom")


class SigmaMode(str, Enum):
    FIXED = 'fixed'
    POWER = 'power'


@dataclass(frozen=True)
class SigmaSchedule:
    """
    Smoothing-parameter schedule.

    fixed: sigma_k = sigma0 for every k.
    power: sigma_0 = sigma0 and sigma_k = k^(-exponent) for k >= 1
    (exponent > 0, 1/3 by default). Non-increasing when sigma0 >= 1;
    a smaller sigma0 is accepted with a warning.
    """
    mode: SigmaMode = SigmaMode.FIXED
    sigma0: float = 1.0
    exponent: float = 1.0 / 3.0

    def __post_init__(self):
        object.__setattr__(self, 'mode', SigmaMode(self.mode))
        if not self.sigma0 > 0:
            raise ParameterError(f"sigma0 must be positive, got {self.sigma0}")
        if self.mode == SigmaMode.POWER:
            if not self.exponent > 0:
                raise ParameterError(f"power schedule needs a positive exponent, got {self.exponent}")
            if self.sigma0 < 1:
                logger.warning("power schedule with sigma0=%g < 1 rises to 1 at k=1 before decaying", self.sigma0)

    @classmethod
    def fixed(cls, sigma: float) -> "SigmaSchedule":
        return cls(SigmaMode.FIXED, sigma)

    @classmethod
    def power(cls, sigma0: float = 1.0, exponent: float = 1.0 / 3.0) -> "SigmaSchedule":
        return cls(SigmaMode.POWER, sigma0, exponent)

    def at(self, k: int) -> float:
        return sigma_at(self, k)


def _check_sigma(sigma: float):
    if not sigma > 0:
        raise ParameterError(f"smoothing parameter must be positive, got {sigma}")


def reg_value(g: Regularizer, X) -> float:
    """weight * ||X||_1 (L1) or weight * sum of row 2-norms (L21)."""
    X = np.asarray(X, dtype=float)
    if g.kind == RegularizerKind.L1:
        return float(g.weight * np.abs(X).sum())
    if g.kind == RegularizerKind.L21:
        return float(g.weight * np.linalg.norm(X, axis=1).sum())
    return float(g.value_fn(X))


def prox(g: Regularizer, sigma: float, X) -> np.ndarray:
    """
    Proximal operator argmin_Y g(Y) + ||Y - X||_F^2 / (2 sigma).

    L1 is entrywise soft thresholding and L21 row-wise block soft
    thresholding, both at threshold t = sigma * weight.
    """
    _check_sigma(sigma)
    X = np.asarray(X, dtype=float)
    if g.kind == RegularizerKind.CUSTOM:
        return np.asarray(g.prox_fn(sigma, X), dtype=float)

    t = sigma * g.weight
    if g.kind == RegularizerKind.L1:
        return np.sign(X) * np.maximum(np.abs(X) - t, 0.0)

    norms = np.linalg.norm(X, axis=1, keepdims=True)
    # zero rows map to zero
    scale = np.zeros_like(norms)
    nonzero = norms > 0
    scale[nonzero] = np.maximum(1.0 - t / norms[nonzero], 0.0)
    return X * scale


def env_value(g: Regularizer, sigma: float, X) -> float:
    """Moreau envelope g(prox(X)) + ||prox(X) - X||_F^2 / (2 sigma)."""
    X = np.asarray(X, dtype=float)
    Y = prox(g, sigma, X)
    return reg_value(g, Y) + float(np.sum((Y - X) ** 2)) / (2.0 * sigma)


def env_grad(g: Regularizer, sigma: float, X) -> np.ndarray:
    """Envelope gradient (X - prox(X)) / sigma; its norm is at most g.lipschitz."""
    X = np.asarray(X, dtype=float)
    return (X - prox(g, sigma, X)) / sigma


def sigma_at(schedule: SigmaSchedule, k: int) -> float:
    if k < 0:
        raise ParameterError(f"iteration index must be >= 0, got {k}")
    if schedule.mode == SigmaMode.FIXED or k == 0:
        return schedule.sigma0
    return float(k) ** (-schedule.exponent)
