"""Validated parameter and result types shared by all modules.

Everything is an immutable value object: instances can be shared freely
between threads or processes without synchronization.  Units are
dimensionless with disk radius 1 throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import ParameterError

__all__ = ["ModelParams", "MetResult", "MetCurve", "validate_params"]


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of surface-mediated diffusion in the unit disk.

    Attributes
    ----------
    a : float
        Radial ejection distance after desorption, 0 < a <= 1.  A
        desorbing particle restarts bulk diffusion at radius 1 - a.
    epsilon : float
        Angular half-width of the absorbing arc, 0 <= epsilon <= pi.
        epsilon = 0 (point-like target) is legal only for operations
        documented to support it.
    d1 : float
        Surface diffusion coefficient (rad^2 / time), > 0.
    d2 : float
        Bulk diffusion coefficient (length^2 / time), > 0.
    lam : float
        Desorption rate (1 / time), >= 0.
    """

    a: float
    epsilon: float
    d1: float = 1.0
    d2: float = 1.0
    lam: float = 0.0


def validate_params(p: ModelParams) -> ModelParams:
    """Return ``p`` unchanged if every invariant holds.

    Raises
    ------
    ParameterError
        Naming the first violated bound.
    """
    if not (math.isfinite(p.a) and 0.0 < p.a <= 1.0):
        raise ParameterError(f"a must satisfy 0 < a <= 1, got {p.a!r}")
    if not (math.isfinite(p.epsilon) and 0.0 <= p.epsilon <= math.pi):
        raise ParameterError(f"epsilon must satisfy 0 <= epsilon <= pi, got {p.epsilon!r}")
    if not (math.isfinite(p.d1) and p.d1 > 0.0):
        raise ParameterError(f"d1 must be positive, got {p.d1!r}")
    if not (math.isfinite(p.d2) and p.d2 > 0.0):
        raise ParameterError(f"d2 must be positive, got {p.d2!r}")
    if not (math.isfinite(p.lam) and p.lam >= 0.0):
        raise ParameterError(f"lam must be nonnegative, got {p.lam!r}")
    return p


@dataclass(frozen=True)
class MetResult:
    """A mean exit time together with truncation diagnostics.

    ``residual_estimate`` bounds the numerical error from series
    truncation or extrapolation; ``extrapolated`` records whether a tail
    correction or partial-sum extrapolation was applied.
    """

    value: float
    truncation_n: int = 0
    extrapolated: bool = False
    residual_estimate: float = 0.0

    def __post_init__(self):
        if not (self.value >= 0.0):
            raise ParameterError(f"MET value must be nonnegative, got {self.value!r}")
        if not (self.residual_estimate >= 0.0):
            raise ParameterError(
                f"residual estimate must be nonnegative, got {self.residual_estimate!r}"
            )


@dataclass(frozen=True)
class MetCurve:
    """Mean exit times on a grid of desorption rates.

    ``limit_t`` and ``c1`` are the large-rate limit and the coefficient
    of its inverse-square-root correction; they are attached only for
    extended targets on non-degenerate grids.
    """

    lambdas: Tuple[float, ...]
    values: Tuple[float, ...]
    limit_t: Optional[float] = None
    c1: Optional[float] = None

    def __post_init__(self):
        if len(self.lambdas) != len(self.values):
            raise ParameterError("lambdas and values must have matching lengths")
        if len(self.lambdas) == 0:
            raise ParameterError("curve must contain at least one point")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ParameterError("lambdas must be strictly increasing")
