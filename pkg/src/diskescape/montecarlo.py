"""Stochastic oracle: direct simulation of the intermittent process.

A path alternates surface and bulk phases.  On the circle it performs
Brownian motion (diffusivity d1) absorbed by the target arc; because the
non-target part of the circle unrolls to the interval
(-(pi - eps), pi - eps) with the target behind both ends, the surface
phase is exactly a 1D first-passage problem on that interval.  Each
phase carries one exponential desorption clock; on desorption the
particle is ejected to radius 1 - a at its current angle and diffuses in
the bulk (diffusivity d2) until it returns to the circle.

Two bulk modes are provided.  The exact-jump mode samples the return
angle from the harmonic-measure law of the disk (a wrapped Cauchy
centered at the starting angle with concentration 1 - a) and adds the
excursion's conditional expected duration (1 - (1-a)^2) / (4 d2)
deterministically; the estimator mean is unchanged because whether a
later excursion happens never depends on an earlier excursion's
duration, and the variance drops.  The euler mode integrates the 2D
walk with its own time step and serves as the assumption-free oracle.

Surface steps use a Brownian-bridge crossing correction by default,
which removes the leading discretization bias of endpoint-only hit
detection.  Paths are processed in fixed-size batches, each driven by
its own counter-based generator derived from (seed, batch index), and
batch results are combined in batch order, so results are bit-identical
for a given (seed, config) regardless of how batches would be
distributed over workers.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NumericalError, ParameterError
from .params import ModelParams, validate_params

__all__ = [
    "SimConfig",
    "SimEstimate",
    "ConvergenceStudy",
    "simulate_met",
    "bulk_excursion_exact",
    "convergence_study",
    "default_dt_surface",
    "default_dt_bulk",
]

logger = logging.getLogger(__name__)

BATCH_SIZE = 16384
# switch to multi-step chunks once the active pool is this small
_CHUNK_POOL = 4096
_CHUNK_STEPS = 64
_BULK_MODES = ("exact-jump", "euler")


def default_dt_surface(p: ModelParams) -> float:
    """Default surface step: resolves the target and the domain.

    min(eps, pi - eps, 1)^2 / 100 / d1; the step standard deviation is
    then about a seventh of the smallest geometric feature.
    """
    m = min(p.epsilon, math.pi - p.epsilon, 1.0)
    if m <= 0.0:
        return 1e-6 / p.d1  # eps = pi: every path is absorbed immediately
    return m * m * 1e-2 / p.d1


def default_dt_bulk(p: ModelParams) -> float:
    """Default bulk step: resolves the ejection depth and the target."""
    m = min(p.a, p.epsilon, 1.0)
    return max(m * m * 1e-2, 1e-6) / p.d2


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``start`` is either "uniform" (uniform angle on the circle, so a
    fraction eps/pi of paths begins on the target and contributes zero)
    or a fixed angle in radians.  ``dt_surface`` and ``dt_bulk`` default
    to geometry-resolving values when None.
    """

    params: ModelParams
    n_paths: int = 100_000
    dt_surface: Optional[float] = None
    seed: int = 0
    start: Union[str, float] = "uniform"
    bulk_mode: str = "exact-jump"
    dt_bulk: Optional[float] = None
    bridge: bool = True

    def resolved_dt_surface(self) -> float:
        return default_dt_surface(self.params) if self.dt_surface is None else self.dt_surface

    def resolved_dt_bulk(self) -> float:
        return default_dt_bulk(self.params) if self.dt_bulk is None else self.dt_bulk


@dataclass(frozen=True)
class SimEstimate:
    """Sample mean and standard error of the exit time."""

    mean: float
    stderr: float
    n_paths: int
    config_echo: SimConfig


@dataclass(frozen=True)
class ConvergenceStudy:
    """Table of (dt, mean, stderr) rows from a step-refinement sweep."""

    rows: Tuple[Tuple[float, float, float], ...]
    coarse_flags: Tuple[bool, ...]


def _validate_config(cfg: SimConfig) -> None:
    validate_params(cfg.params)
    if cfg.params.epsilon == 0.0:
        raise ParameterError(
            "Monte Carlo requires an extended target (eps > 0): a point "
            "target is never hit by fixed-step detection"
        )
    if cfg.n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {cfg.n_paths}")
    if cfg.resolved_dt_surface() <= 0.0:
        raise ParameterError(f"dt_surface must be positive, got {cfg.dt_surface!r}")
    if cfg.bulk_mode not in _BULK_MODES:
        raise ParameterError(f"bulk_mode must be one of {_BULK_MODES}, got {cfg.bulk_mode!r}")
    if cfg.bulk_mode == "euler" and cfg.resolved_dt_bulk() <= 0.0:
        raise ParameterError(f"dt_bulk must be positive, got {cfg.dt_bulk!r}")
    if isinstance(cfg.start, str):
        if cfg.start != "uniform":
            raise ParameterError(f"start must be 'uniform' or an angle, got {cfg.start!r}")
    elif not math.isfinite(cfg.start):
        raise ParameterError(f"start angle must be finite, got {cfg.start!r}")


def _wrap(theta: np.ndarray) -> np.ndarray:
    """Wrap angles into [-pi, pi)."""
    return np.mod(theta + np.pi, 2.0 * np.pi) - np.pi


def bulk_excursion_exact(theta_start, a: float, d2: float, rng: np.random.Generator):
    """Sample the bulk excursion endpoint; return (exit angles, duration).

    The exit angle is theta_start plus a wrapped-Cauchy jump with
    concentration rho = 1 - a (the harmonic measure of the circle seen
    from radius rho); the duration is the excursion's expected value
    (1 - (1-a)^2) / (4 d2), returned once since it is the same for every
    path.  For a = 1 the jump is uniform on the circle.
    """
    if not (0.0 < a <= 1.0):
        raise ParameterError(f"a must satisfy 0 < a <= 1, got {a!r}")
    if d2 <= 0.0:
        raise ParameterError(f"d2 must be positive, got {d2!r}")
    theta_start = np.asarray(theta_start, dtype=float)
    rho = 1.0 - a
    u = rng.random(theta_start.shape)
    delta = 2.0 * np.arctan((1.0 - rho) / (1.0 + rho) * np.tan(np.pi * (u - 0.5)))
    duration = (1.0 - rho * rho) / (4.0 * d2)
    return _wrap(theta_start + delta), duration


def _advance_surface(rng, x, t, tau, n_steps, dt, d1, b_edge, bridge):
    """Advance every surface path by up to ``n_steps`` steps of size dt.

    A path's step shrinks to its remaining desorption time when that is
    less than dt, and becomes zero afterwards, so no path moves past its
    own desorption instant inside the chunk.  Returns surviving paths,
    absorbed exit times, and desorbed paths (position, elapsed time).
    """
    m = x.size
    rows = np.arange(n_steps, dtype=float)[:, None]
    dti = np.clip(tau[None, :] - rows * dt, 0.0, dt)
    steps = np.sqrt(2.0 * d1 * dti) * rng.standard_normal((n_steps, m))
    pos = x[None, :] + np.cumsum(steps, axis=0)
    prev = np.vstack([x[None, :], pos[:-1]])
    hit = np.abs(pos) >= b_edge
    if bridge:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            p_cross = np.exp(-(b_edge - prev) * (b_edge - pos) / (d1 * dti)) + np.exp(
                -(b_edge + prev) * (b_edge + pos) / (d1 * dti)
            )
        hit |= (rng.random((n_steps, m)) < p_cross) & (dti > 0.0)
    cum_dt = np.cumsum(dti, axis=0)
    any_hit = hit.any(axis=0)
    cols = np.nonzero(any_hit)[0]
    absorbed_t = np.empty(0)
    if cols.size:
        first = hit[:, cols].argmax(axis=0)
        absorbed_t = t[cols] + cum_dt[first, cols]
    keep = ~any_hit
    x_new = pos[-1, keep]
    t_new = t[keep] + cum_dt[-1, keep]
    tau_new = tau[keep] - cum_dt[-1, keep]
    desorbed = tau_new <= dt * 1e-6
    return (
        x_new[~desorbed],
        t_new[~desorbed],
        tau_new[~desorbed],
        absorbed_t,
        x_new[desorbed],
        t_new[desorbed],
    )


def _advance_bulk(rng, bx, by, bt, n_steps, dt, d2):
    """Advance bulk paths; returns survivors and (exit angle, exit time)."""
    m = bx.size
    scale = math.sqrt(2.0 * d2 * dt)
    xs = bx[None, :] + np.cumsum(scale * rng.standard_normal((n_steps, m)), axis=0)
    ys = by[None, :] + np.cumsum(scale * rng.standard_normal((n_steps, m)), axis=0)
    outside = xs * xs + ys * ys >= 1.0
    any_out = outside.any(axis=0)
    cols = np.nonzero(any_out)[0]
    exit_angle = np.empty(0)
    exit_t = np.empty(0)
    if cols.size:
        first = outside[:, cols].argmax(axis=0)
        exit_angle = np.arctan2(ys[first, cols], xs[first, cols])
        exit_t = bt[cols] + (first + 1.0) * dt
    keep = ~any_out
    return (
        xs[-1, keep],
        ys[-1, keep],
        bt[keep] + n_steps * dt,
        exit_angle,
        exit_t,
    )


def _run_batch(rng, n, cfg: SimConfig) -> Tuple[float, float, int]:
    """Simulate one batch of paths; return (sum, sum of squares, count)."""
    p = cfg.params
    b_edge = math.pi - p.epsilon
    dt_s = cfg.resolved_dt_surface()
    dt_b = cfg.resolved_dt_bulk()
    exact = cfg.bulk_mode == "exact-jump"
    lam = p.lam

    if isinstance(cfg.start, str):
        x = rng.uniform(-math.pi, math.pi, n)
    else:
        x = np.full(n, float(_wrap(np.asarray(cfg.start))))
    t = np.zeros(n)

    total = 0.0
    total_sq = 0.0
    count = 0

    def absorb(times: np.ndarray) -> None:
        nonlocal total, total_sq, count
        if times.size:
            total += float(np.sum(times))
            total_sq += float(np.sum(times * times))
            count += times.size

    on_target = np.abs(x) >= b_edge
    absorb(t[on_target])
    x = x[~on_target]
    t = t[~on_target]

    def fresh_tau(k: int) -> np.ndarray:
        if lam > 0.0:
            return rng.exponential(1.0 / lam, k)
        return np.full(k, np.inf)

    tau = fresh_tau(x.size)
    bx = np.empty(0)
    by = np.empty(0)
    bt = np.empty(0)

    while x.size or bx.size:
        if x.size:
            k = 1 if x.size >= _CHUNK_POOL else _CHUNK_STEPS
            x, t, tau, absorbed_t, des_x, des_t = _advance_surface(
                rng, x, t, tau, k, dt_s, p.d1, b_edge, cfg.bridge
            )
            absorb(absorbed_t)
            if des_x.size:
                if exact:
                    angles, duration = bulk_excursion_exact(des_x, p.a, p.d2, rng)
                    des_t = des_t + duration
                    landed = np.abs(angles) >= b_edge
                    absorb(des_t[landed])
                    x = np.concatenate([x, angles[~landed]])
                    t = np.concatenate([t, des_t[~landed]])
                    tau = np.concatenate([tau, fresh_tau(int(np.sum(~landed)))])
                else:
                    r0 = 1.0 - p.a
                    bx = np.concatenate([bx, r0 * np.cos(des_x)])
                    by = np.concatenate([by, r0 * np.sin(des_x)])
                    bt = np.concatenate([bt, des_t])
        if bx.size:
            k = 1 if bx.size >= _CHUNK_POOL else _CHUNK_STEPS
            bx, by, bt, exit_angle, exit_t = _advance_bulk(rng, bx, by, bt, k, dt_b, p.d2)
            if exit_angle.size:
                landed = np.abs(exit_angle) >= b_edge
                absorb(exit_t[landed])
                back = ~landed
                x = np.concatenate([x, exit_angle[back]])
                t = np.concatenate([t, exit_t[back]])
                tau = np.concatenate([tau, fresh_tau(int(np.sum(back)))])
    return total, total_sq, count


def simulate_met(cfg: SimConfig) -> SimEstimate:
    """Estimate the mean exit time by direct simulation.

    Identical (seed, config) pairs produce bit-identical estimates.

    Returns
    -------
    SimEstimate
        Sample mean, standard error (sample std / sqrt(n)), path count,
        and an echo of the configuration.
    """
    _validate_config(cfg)
    seed = cfg.seed & (2**64 - 1)
    total = 0.0
    total_sq = 0.0
    count = 0
    n_batches = (cfg.n_paths + BATCH_SIZE - 1) // BATCH_SIZE
    for batch in range(n_batches):
        size = min(BATCH_SIZE, cfg.n_paths - batch * BATCH_SIZE)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, batch])))
        s, sq, c = _run_batch(rng, size, cfg)
        total += s
        total_sq += sq
        count += c
    if count != cfg.n_paths:
        raise NumericalError(f"path accounting error: {count} != {cfg.n_paths}")
    mean = total / count
    if count > 1:
        var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
        stderr = math.sqrt(var / count)
    else:
        stderr = 0.0
    return SimEstimate(mean=mean, stderr=stderr, n_paths=count, config_echo=cfg)


def convergence_study(cfg: SimConfig, dt_sequence: Sequence[float]) -> ConvergenceStudy:
    """Re-run the simulation over a decreasing sequence of surface steps.

    Uses the shared base seed for every run, flags steps too coarse to
    resolve the target (dt * d1 > eps^2), and requires successive means
    to agree within three combined standard errors.

    Raises
    ------
    NumericalError
        When successive means are inconsistent (discretization failure).
    """
    dts = [float(d) for d in dt_sequence]
    if len(dts) < 2:
        raise ParameterError("dt_sequence must contain at least two steps")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ParameterError("dt_sequence must be strictly decreasing")
    rows: List[Tuple[float, float, float]] = []
    flags: List[bool] = []
    eps = cfg.params.epsilon
    for dt in dts:
        coarse = dt * cfg.params.d1 > eps * eps
        if coarse:
            logger.warning(
                "dt_surface=%g is too coarse for the target (dt*d1 > eps^2); "
                "paths can step over the arc",
                dt,
            )
        flags.append(coarse)
        est = simulate_met(dataclasses.replace(cfg, dt_surface=dt))
        rows.append((dt, est.mean, est.stderr))
    for (dt0, m0, s0), (dt1, m1, s1) in zip(rows, rows[1:]):
        gap = abs(m1 - m0)
        limit = 3.0 * math.hypot(s0, s1)
        if gap > limit:
            raise NumericalError(
                f"discretization failure: means at dt={dt0:g} and dt={dt1:g} "
                f"differ by {gap:.4g} (> {limit:.4g})"
            )
    return ConvergenceStudy(rows=tuple(rows), coarse_flags=tuple(flags))
