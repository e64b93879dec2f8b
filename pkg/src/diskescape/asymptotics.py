"""Power-law asymptotics of the spectrum and the large-rate correction.

The eigenvalues fall off in two regimes separated by the ejection
crossover 1/a (slope -1 before, -2 after, with the tail coefficient
depending only on the target size).  The spectral weights show up to
three regimes split at min(1/a, 1/eps) and max(1/a, 1/eps) with nominal
slopes -3, -4, -6.  All fits run in log-log space with equal weights;
a guard band of factor 3 around each crossover is excluded, and only
the lower half of the computed spectrum enters any window (the upper
half is corrupted by matrix truncation).

Each fit reports, besides the relative RMS misfit, a combined
``uncertainty`` that adds the systematic error of imposing the nominal
exponent: refitting with a free exponent and propagating the slope
discrepancy over half the window width in log n.  Crossover transients
bend the data inside a finite window, and the RMS alone does not see a
bend that the intercept absorbs.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalError, ParameterError
from .operator import DEFAULT_MAX_N_TRUNC, assemble_vtv
from .params import ModelParams, validate_params
from .spectral import SpectralData, decompose, met_limit

__all__ = [
    "PowerLawFit",
    "EigenvalueRegimes",
    "WeightRegimes",
    "AsymptoticFit",
    "LogDivergenceFit",
    "fit_eigenvalue_regimes",
    "fit_weight_regimes",
    "fit_asymptotics",
    "c1_coefficient",
    "check_log_divergence",
]

logger = logging.getLogger(__name__)

GUARD_FACTOR = 3.0
_MIN_POINTS = 2


@dataclass(frozen=True)
class PowerLawFit:
    """A fixed-exponent power-law fit y ~ coefficient * n^exponent.

    ``exponent_free`` is the slope of an unconstrained log-log refit on
    the same window; ``uncertainty`` combines the RMS misfit with the
    lever-arm systematic |exponent_free - exponent| * half window width.
    """

    coefficient: float
    exponent: float
    exponent_free: float
    residual_rms: float
    uncertainty: float
    window: Tuple[int, int]
    n_points: int


@dataclass(frozen=True)
class EigenvalueRegimes:
    """Head (slope -1) and tail (slope -2) fits of the eigenvalues."""

    a_tilde: Optional[PowerLawFit]
    a_eps: PowerLawFit
    crossover: float


@dataclass(frozen=True)
class WeightRegimes:
    """Up to three power-law fits of the spectral weights.

    ``intermediate_absent`` is set when the two crossovers are too close
    for a clean middle window (or the target is point-like and the
    ultimate regime is missing instead).
    """

    b_tilde: Optional[PowerLawFit]
    b_prime: Optional[PowerLawFit]
    b_eps: Optional[PowerLawFit]
    crossover_low: float
    crossover_high: float
    intermediate_absent: bool


@dataclass(frozen=True)
class AsymptoticFit:
    """Bundle of asymptotic coefficients extracted from one spectrum."""

    a_eps: float
    a_tilde: Optional[float]
    b_eps: Optional[float]
    b_tilde: Optional[float]
    b_prime: Optional[float]
    c1: Optional[float]
    fit_windows: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    residuals: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class LogDivergenceFit:
    """Linear regression of the large-rate limit against ln(1/eps)."""

    slope: float
    intercept: float
    residual_rms: float
    epsilons: Tuple[float, ...]
    limits: Tuple[float, ...]


def _fit_window(n: np.ndarray, y: np.ndarray, lo: int, hi: int, exponent: float) -> PowerLawFit:
    sel = (n >= lo) & (n <= hi) & (y > 0.0)
    pts = int(np.sum(sel))
    if pts < _MIN_POINTS:
        raise NumericalError(f"window [{lo}, {hi}] has {pts} usable points")
    ln_n = np.log(n[sel])
    ln_y = np.log(y[sel])
    intercept = float(np.mean(ln_y - exponent * ln_n))
    resid = ln_y - (intercept + exponent * ln_n)
    rms = float(np.sqrt(np.mean(resid**2)))
    design = np.column_stack([np.ones(pts), ln_n])
    free, *_ = np.linalg.lstsq(design, ln_y, rcond=None)
    exponent_free = float(free[1])
    half_width = 0.5 * (math.log(hi) - math.log(lo)) if hi > lo else 0.0
    return PowerLawFit(
        coefficient=math.exp(intercept),
        exponent=exponent,
        exponent_free=exponent_free,
        residual_rms=rms,
        uncertainty=rms + abs(exponent_free - exponent) * half_width,
        window=(lo, hi),
        n_points=pts,
    )


def fit_eigenvalue_regimes(s: SpectralData) -> EigenvalueRegimes:
    """Fit the two eigenvalue regimes split at the crossover 1/a.

    Head window [1, 1/(3a)] carries slope -1 (skipped when too short,
    e.g. for a near 1); tail window [max(10, 3/a), N/2] carries slope -2.

    Raises
    ------
    NumericalError
        When the tail window is too small, reporting the truncation
        order that would be required.
    """
    a = s.params.a
    n = np.arange(1, s.n_trunc + 1)
    crossover = 1.0 / a
    tail_lo = max(10, math.ceil(GUARD_FACTOR * crossover))
    tail_hi = s.n_trunc // 2
    if tail_hi - tail_lo + 1 < _MIN_POINTS:
        required = 2 * (tail_lo + _MIN_POINTS - 1)
        raise NumericalError(
            f"tail window [{tail_lo}, {tail_hi}] is too small; "
            f"need n_trunc >= {required}"
        )
    a_eps = _fit_window(n, s.eigenvalues, tail_lo, tail_hi, -2.0)
    head_hi = min(math.floor(crossover / GUARD_FACTOR), tail_hi)
    a_tilde = None
    if head_hi >= _MIN_POINTS:
        a_tilde = _fit_window(n, s.eigenvalues, 1, head_hi, -1.0)
    return EigenvalueRegimes(a_tilde=a_tilde, a_eps=a_eps, crossover=crossover)


def fit_weight_regimes(s: SpectralData) -> WeightRegimes:
    """Fit the spectral-weight regimes split at min and max of 1/a, 1/eps.

    Windows (guard factor 3, upper limit N/2):

      head          [1, m1/3]        slope -3
      intermediate  [3 m1, m2/3]     slope -4
      tail          [3 m2, N/2]      slope -6

    with m1 = min(1/a, 1/eps), m2 = max(1/a, 1/eps).  When a ~ eps the
    intermediate window is empty and reported absent; for a point-like
    target m2 is infinite, the ultimate regime is missing, and the
    intermediate window extends to N/2.
    """
    p = s.params
    n = np.arange(1, s.n_trunc + 1)
    inv_a = 1.0 / p.a
    inv_eps = math.inf if p.epsilon == 0.0 else 1.0 / p.epsilon
    m1 = min(inv_a, inv_eps)
    m2 = max(inv_a, inv_eps)
    half = s.n_trunc // 2

    b_tilde = None
    head_hi = min(math.floor(m1 / GUARD_FACTOR), half)
    if head_hi >= _MIN_POINTS:
        b_tilde = _fit_window(n, s.weights, 1, head_hi, -3.0)

    b_prime = None
    mid_lo = math.ceil(GUARD_FACTOR * m1)
    mid_hi = half if math.isinf(m2) else min(math.floor(m2 / GUARD_FACTOR), half)
    intermediate_absent = mid_hi - mid_lo + 1 < _MIN_POINTS
    if not intermediate_absent:
        b_prime = _fit_window(n, s.weights, mid_lo, mid_hi, -4.0)
    else:
        logger.info(
            "intermediate weight regime absent: window [%d, %d] "
            "(crossovers %.3g and %.3g are not separated enough)",
            mid_lo, mid_hi, m1, m2,
        )

    b_eps = None
    if not math.isinf(m2):
        tail_lo = math.ceil(GUARD_FACTOR * m2)
        if half - tail_lo + 1 >= _MIN_POINTS:
            b_eps = _fit_window(n, s.weights, tail_lo, half, -6.0)
    return WeightRegimes(
        b_tilde=b_tilde,
        b_prime=b_prime,
        b_eps=b_eps,
        crossover_low=m1,
        crossover_high=m2,
        intermediate_absent=intermediate_absent,
    )


def c1_coefficient(fit: AsymptoticFit, p: ModelParams) -> float:
    """Coefficient of the inverse-square-root approach to the limit.

    C1 = (sqrt(d1) / d2) (1-(1-a)^2) B / (8 A^(5/2)) from the tail
    coefficients A (eigenvalues) and B (weights).
    """
    validate_params(p)
    if p.epsilon <= 0.0:
        raise ParameterError("c1 is defined for extended targets only (eps > 0)")
    if fit.b_eps is None:
        raise NumericalError("weight tail coefficient is missing from the fit")
    return (
        math.sqrt(p.d1)
        / p.d2
        * (1.0 - (1.0 - p.a) ** 2)
        * fit.b_eps
        / (8.0 * fit.a_eps ** 2.5)
    )


def fit_asymptotics(s: SpectralData) -> AsymptoticFit:
    """Run both regime fits and assemble the coefficient bundle."""
    eig = fit_eigenvalue_regimes(s)
    wts = fit_weight_regimes(s)
    windows: Dict[str, Tuple[int, int]] = {"a_eps": eig.a_eps.window}
    residuals: Dict[str, float] = {"a_eps": eig.a_eps.residual_rms}
    for name, f in (
        ("a_tilde", eig.a_tilde),
        ("b_tilde", wts.b_tilde),
        ("b_prime", wts.b_prime),
        ("b_eps", wts.b_eps),
    ):
        if f is not None:
            windows[name] = f.window
            residuals[name] = f.residual_rms
    bundle = AsymptoticFit(
        a_eps=eig.a_eps.coefficient,
        a_tilde=None if eig.a_tilde is None else eig.a_tilde.coefficient,
        b_eps=None if wts.b_eps is None else wts.b_eps.coefficient,
        b_tilde=None if wts.b_tilde is None else wts.b_tilde.coefficient,
        b_prime=None if wts.b_prime is None else wts.b_prime.coefficient,
        c1=None,
        fit_windows=windows,
        residuals=residuals,
    )
    if s.params.epsilon > 0.0 and wts.b_eps is not None:
        bundle = dataclasses.replace(bundle, c1=c1_coefficient(bundle, s.params))
    return bundle


def check_log_divergence(
    a: float,
    d2: float,
    eps_grid: Sequence[float],
    d1: float = 1.0,
    n_trunc: int = 2048,
    max_n_trunc: int = DEFAULT_MAX_N_TRUNC,
) -> LogDivergenceFit:
    """Regress the large-rate limit against ln(1/eps) over a target grid.

    The limit diverges logarithmically as the target shrinks while the
    grid stays above the ejection distance; a grid entirely below ``a``
    probes a different regime and is rejected.
    """
    eps = tuple(float(e) for e in eps_grid)
    if len(eps) < 2:
        raise ParameterError("eps_grid must contain at least two targets")
    if all(e <= a for e in eps):
        raise ParameterError(
            f"eps_grid lies entirely below a = {a!r}; the ejection distance "
            "alters the logarithmic regime there"
        )
    if any(e <= a for e in eps) or any(e >= 1.0 for e in eps):
        logger.warning("eps_grid extends outside (a, 1); regression may degrade")
    limits = []
    for e in eps:
        p = ModelParams(a=a, epsilon=e, d1=d1, d2=d2)
        s = decompose(assemble_vtv(p, n_trunc, max_n_trunc))
        limits.append(met_limit(s).value)
    x = np.log(1.0 / np.asarray(eps))
    design = np.column_stack([np.ones(len(eps)), x])
    coef, *_ = np.linalg.lstsq(design, np.asarray(limits), rcond=None)
    resid = np.asarray(limits) - design @ coef
    return LogDivergenceFit(
        slope=float(coef[1]),
        intercept=float(coef[0]),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        epsilons=eps,
        limits=tuple(limits),
    )
