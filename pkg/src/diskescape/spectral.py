"""Spectral engine: diagonalization, exit-time series, and extrapolation.

The mean exit time over a uniform starting point on the circle has the
spectral representation (prefactor q = lam / d1)

    <t1> = (1 / (pi d1)) (1 + lam (1-(1-a)^2)/(4 d2))
           * [ (pi-eps)^3/3 - q * sum_n psi_n^2 / (1 + q lambda_n) ]

and, for extended targets (eps > 0), the equivalent form

    <t1> = (1/pi) (1/lam + (1-(1-a)^2)/(4 d2))
           * sum_n psi_n^2 / (lambda_n (d1/lam + lambda_n)),

which is free of the large-lam cancellation between the constant term
and the series, and is therefore what :func:`met` evaluates whenever
lam > 0 and eps > 0.  The large-lam limit is

    T = (1-(1-a)^2)/(4 pi d2) * sum_n psi_n^2 / lambda_n^2.

All series are truncated sums over the eigenpairs of one dense
decomposition; the infinite-N limit is recovered by a fourth order
polynomial fit of partial sums against 1/N.  Partial sums are taken at
six cutoffs between N/12 and N/2: eigenpairs in the upper half of a
truncated spectrum are corrupted by the truncation itself and must not
enter the fit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import NumericalError, ParameterError
from .operator import OperatorMatrix, psi_projection
from .params import MetCurve, MetResult, ModelParams

__all__ = [
    "SpectralData",
    "PartialSumFit",
    "decompose",
    "met",
    "met_limit",
    "met_curve",
    "extrapolate_partial_sums",
    "find_optimal_lambda",
]

logger = logging.getLogger(__name__)

# eigenvalues below TOL_EIG_REL * lambda_1 are treated as kernel modes
TOL_EIG_REL = 1e-12
# relative truncation residual above which met() logs a warning
WARN_RESIDUAL_REL = 1e-3
_FIT_CUTOFF_FRACTIONS = np.arange(1, 7) / 12.0
_MAX_FIT_CONDITION = 1e12


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (descending), spectral weights, and their provenance.

    ``eigenvalues[k]`` pairs with ``weights[k]``; kernel modes are
    clamped to exactly zero and carry (numerically) zero weight.  The
    eigenvector coordinate matrix is kept for diagnostics only.
    """

    n_trunc: int
    eigenvalues: np.ndarray
    weights: np.ndarray
    params: ModelParams
    eigenvectors: Optional[np.ndarray] = None

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.weights.setflags(write=False)
        if self.eigenvectors is not None:
            self.eigenvectors.setflags(write=False)


@dataclass(frozen=True)
class PartialSumFit:
    """Result of extrapolating partial sums to their infinite-N limit."""

    limit: float
    coefficients: Tuple[float, ...]
    condition: float
    residual_rms: float


def decompose(matrix: OperatorMatrix, tol_eig_rel: float = TOL_EIG_REL) -> SpectralData:
    """Diagonalize the operator matrix and form the spectral weights.

    Weights are psi_n^2 = (2/pi) (sum_m v_mn <psi, cos m theta>)^2, so the
    sign ambiguity of eigenvectors is irrelevant downstream.

    Raises
    ------
    NumericalError
        If the eigensolver fails to converge, or a negative eigenvalue
        exceeds round-off scale (the operator is positive semidefinite).
    """
    try:
        eigvals, eigvecs = np.linalg.eigh(matrix.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from exc
    # descending order
    eigvals = eigvals[::-1].copy()
    eigvecs = eigvecs[:, ::-1].copy()
    lam_max = float(eigvals[0]) if eigvals.size else 0.0
    tol = tol_eig_rel * max(lam_max, 0.0)
    if eigvals.size and eigvals[-1] < -max(tol, tol_eig_rel):
        idx = int(np.argmin(eigvals))
        raise NumericalError(
            f"eigenvalue {eigvals[idx]:.3e} at index {idx} is negative beyond "
            f"round-off (tolerance {tol:.3e})"
        )
    eigvals[np.abs(eigvals) <= tol] = 0.0

    coords = psi_projection(matrix.params, matrix.n_trunc).coords
    weights = (2.0 / np.pi) * (eigvecs.T @ coords) ** 2
    return SpectralData(
        n_trunc=matrix.n_trunc,
        eigenvalues=eigvals,
        weights=weights,
        params=matrix.params,
        eigenvectors=eigvecs,
    )


def extrapolate_partial_sums(partials: Sequence[Tuple[int, float]]) -> PartialSumFit:
    """Extrapolate a sequence of partial sums f(N) to N -> infinity.

    Fits f(N) ~ c0 + c1/N + c2/N^2 + c3/N^3 + c4/N^4 by least squares in
    the variable 1/N and returns c0 with diagnostics.

    Parameters
    ----------
    partials : sequence of (N, f(N))
        At least six strictly increasing cutoffs.

    Raises
    ------
    ParameterError
        Fewer than six points or non-increasing cutoffs.
    NumericalError
        Ill-conditioned fit (cutoffs too clustered), with the condition
        estimate in the message.
    """
    ns = np.asarray([q[0] for q in partials], dtype=float)
    fs = np.asarray([q[1] for q in partials], dtype=float)
    if ns.size < 6:
        raise ParameterError(f"need at least 6 cutoffs, got {ns.size}")
    if np.any(np.diff(ns) <= 0):
        raise ParameterError("cutoffs must be strictly increasing")
    x = 1.0 / ns
    t = x / x.max()
    vander = np.vander(t, 5, increasing=True)
    sv = np.linalg.svd(vander, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if condition > _MAX_FIT_CONDITION:
        raise NumericalError(
            f"partial-sum fit is ill-conditioned (condition estimate "
            f"{condition:.2e}); cutoffs are too clustered"
        )
    coeffs, *_ = np.linalg.lstsq(vander, fs, rcond=None)
    resid = fs - vander @ coeffs
    return PartialSumFit(
        limit=float(coeffs[0]),
        coefficients=tuple(float(c) for c in coeffs),
        condition=condition,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def _series_limit(terms: np.ndarray, n_trunc: int) -> Tuple[float, float, bool]:
    """Sum a spectral series with the default partial-sum extrapolation.

    Returns (limit, error_estimate, extrapolated).  ``terms`` must be
    aligned with eigenvalue index (descending eigenvalues); entries for
    excluded modes are zero.  For very small truncations the plain sum is
    returned unextrapolated.
    """
    cutoffs = np.unique((n_trunc * _FIT_CUTOFF_FRACTIONS).astype(int))
    cutoffs = cutoffs[cutoffs >= 1]
    if cutoffs.size < 6:
        total = float(np.sum(terms))
        return total, abs(terms[-1]) * n_trunc if terms.size else 0.0, False
    csum = np.cumsum(terms)
    partials = [(int(c), float(csum[c - 1])) for c in cutoffs]
    fit = extrapolate_partial_sums(partials)
    # refit at cubic order; the difference is the extrapolation error proxy
    vander = np.vander(
        (1.0 / cutoffs) / (1.0 / cutoffs).max(), 4, increasing=True
    )
    cubic, *_ = np.linalg.lstsq(vander, csum[cutoffs - 1], rcond=None)
    err = abs(fit.limit - float(cubic[0]))
    return fit.limit, err, True


def _positive(s: SpectralData) -> np.ndarray:
    return s.eigenvalues > 0.0


def met(s: SpectralData, lam: float, warn_rel: float = WARN_RESIDUAL_REL) -> MetResult:
    """Mean exit time at desorption rate ``lam`` from spectral data.

    At lam = 0 the series drops out exactly and the closed surface value
    (pi - eps)^3 / (3 pi d1) is returned.  For lam > 0 the bracketed
    form (truncation error growing with lam) and, when eps > 0, the
    cancellation-free form (best at large lam) are both evaluated with
    partial-sum extrapolation and the one with the smaller residual
    estimate is returned; the residual also takes the half-gap between
    the two forms as a floor.  A diagnostic warning is logged when the
    residual exceeds ``warn_rel`` of the value.
    """
    if lam < 0:
        raise ParameterError(f"lam must be nonnegative, got {lam!r}")
    p = s.params
    eps = p.epsilon
    if lam == 0.0:
        return MetResult(
            value=(np.pi - eps) ** 3 / (3.0 * np.pi * p.d1),
            truncation_n=s.n_trunc,
            extrapolated=False,
            residual_estimate=0.0,
        )
    q = lam / p.d1
    pos = _positive(s)
    # bracketed form: error scales with lam, so it wins at small rates
    terms2 = s.weights / (1.0 + q * s.eigenvalues)
    total2, err2, extrapolated = _series_limit(terms2, s.n_trunc)
    pref2 = (1.0 + lam * (1.0 - (1.0 - p.a) ** 2) / (4.0 * p.d2)) / (np.pi * p.d1)
    raw = pref2 * ((np.pi - eps) ** 3 / 3.0 - q * total2)
    residual = pref2 * q * err2
    if eps > 0.0:
        # cancellation-free form, preferred at large rates
        terms3 = np.zeros(s.n_trunc)
        lp = s.eigenvalues[pos]
        terms3[pos] = s.weights[pos] / (lp * (p.d1 / lam + lp))
        total3, err3, _ = _series_limit(terms3, s.n_trunc)
        pref3 = (1.0 / lam + (1.0 - (1.0 - p.a) ** 2) / (4.0 * p.d2)) / np.pi
        if pref3 * err3 <= residual:
            residual = pref3 * err3
            raw3 = pref3 * total3
            # the forms agree only where the truncation resolves the series,
            # so their gap is an honest floor on the uncertainty
            residual = max(residual, 0.5 * abs(raw3 - raw))
            raw = raw3
        else:
            residual = max(residual, 0.5 * abs(pref3 * total3 - raw))
    if raw < 0.0:
        # round-off for degenerate targets (eps = pi); anything larger is a bug
        if raw < -1e-10 * max(1.0, abs(residual)):
            raise NumericalError(f"negative mean exit time {raw!r} at lam={lam!r}")
        raw = 0.0
    if residual > warn_rel * max(raw, np.finfo(float).tiny):
        logger.warning(
            "truncation residual %.3e exceeds %.1e of the value %.6e at lam=%g",
            residual, warn_rel, raw, lam,
        )
    return MetResult(
        value=float(raw),
        truncation_n=s.n_trunc,
        extrapolated=extrapolated,
        residual_estimate=float(residual),
    )


def met_limit(s: SpectralData) -> MetResult:
    """Large-rate limit of the mean exit time (extended targets only).

    T = (1-(1-a)^2) / (4 pi d2) * sum_n psi_n^2 / lambda_n^2, evaluated
    with partial-sum extrapolation.  Diverges for a point-like target,
    so eps = 0 is rejected.
    """
    p = s.params
    if p.epsilon <= 0.0:
        raise ParameterError(
            "the large-rate limit diverges for a point-like target (eps = 0); "
            "use the point-target bounds instead"
        )
    pos = _positive(s)
    terms = np.zeros(s.n_trunc)
    terms[pos] = s.weights[pos] / s.eigenvalues[pos] ** 2
    total, err, extrapolated = _series_limit(terms, s.n_trunc)
    pref = (1.0 - (1.0 - p.a) ** 2) / (4.0 * np.pi * p.d2)
    return MetResult(
        value=float(max(pref * total, 0.0)),
        truncation_n=s.n_trunc,
        extrapolated=extrapolated,
        residual_estimate=float(pref * err),
    )


def met_curve(s: SpectralData, lambdas: Sequence[float]) -> MetCurve:
    """Evaluate the mean exit time on a strictly increasing rate grid.

    For extended targets the large-rate limit and, when the asymptotic
    fits succeed, the inverse-square-root coefficient are attached.
    A degenerate grid consisting only of lam = 0 skips the attachments.
    """
    grid = tuple(float(v) for v in lambdas)
    if len(grid) == 0:
        raise ParameterError("lambda grid must not be empty")
    if any(v < 0 for v in grid):
        raise ParameterError("lambda grid entries must be nonnegative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("lambda grid must be strictly increasing")
    values = tuple(met(s, lam).value for lam in grid)
    limit_t = None
    c1 = None
    degenerate = grid == (0.0,)
    if s.params.epsilon > 0.0 and not degenerate:
        limit_t = met_limit(s).value
        try:
            from .asymptotics import c1_coefficient, fit_asymptotics

            c1 = c1_coefficient(fit_asymptotics(s), s.params)
        except (NumericalError, ParameterError) as exc:
            logger.warning("asymptotic coefficient unavailable: %s", exc)
    return MetCurve(lambdas=grid, values=values, limit_t=limit_t, c1=c1)


def _met_log_derivative(s: SpectralData, lam: float, rel_step: float = 1e-3) -> float:
    """Central difference of met() with a multiplicative step in lam."""
    lo = lam * (1.0 - rel_step)
    hi = lam * (1.0 + rel_step)
    return (met(s, hi).value - met(s, lo).value) / (hi - lo)


def find_optimal_lambda(
    s: SpectralData,
    bracket: Tuple[float, float],
    rtol: float = 1e-5,
) -> Optional[float]:
    """Locate the desorption rate minimizing the mean exit time.

    The sign of the rate-derivative at lam = 0 decides whether a minimum
    exists: it is negative exactly when

        sum_n psi_n^2 > d1 (1-(1-a)^2) / (4 d2) * (pi-eps)^3 / 3.

    Returns None when no minimum exists.  Otherwise requires the
    numerical derivative to change sign across ``bracket`` and runs a
    golden-section search (on log lam, since optimal rates vary over
    decades).

    Raises
    ------
    NumericalError
        If the bracket does not contain a sign change of the numerical
        derivative.
    """
    lo, hi = bracket
    if not (0.0 < lo < hi):
        raise ParameterError(f"bracket must satisfy 0 < lo < hi, got {bracket!r}")
    p = s.params
    norm_sq, _, _ = _series_limit(s.weights.copy(), s.n_trunc)
    threshold = p.d1 * (1.0 - (1.0 - p.a) ** 2) / (4.0 * p.d2) * (np.pi - p.epsilon) ** 3 / 3.0
    if norm_sq <= threshold:
        return None
    d_lo = _met_log_derivative(s, lo)
    d_hi = _met_log_derivative(s, hi)
    if not (d_lo < 0.0 < d_hi):
        raise NumericalError(
            f"bracket ({lo:g}, {hi:g}) does not contain a sign change of the "
            f"numerical derivative (d_lo={d_lo:.3e}, d_hi={d_hi:.3e})"
        )
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a_log, b_log = math.log(lo), math.log(hi)
    c = b_log - invphi * (b_log - a_log)
    d = a_log + invphi * (b_log - a_log)
    fc = met(s, math.exp(c)).value
    fd = met(s, math.exp(d)).value
    while (b_log - a_log) > rtol:
        if fc < fd:
            b_log, d, fd = d, c, fc
            c = b_log - invphi * (b_log - a_log)
            fc = met(s, math.exp(c)).value
        else:
            a_log, c, fc = c, d, fd
            d = a_log + invphi * (b_log - a_log)
            fd = met(s, math.exp(d)).value
    return math.exp(0.5 * (a_log + b_log))
