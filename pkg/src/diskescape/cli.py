"""Command-line interface.

Subcommands: solve, spectrum, limit, asymptotics, closed-form, simulate,
compare.  Flags override config-file keys; unknown config keys are
errors.  Outputs are locale-independent CSV (17 significant digits,
'\\n' line endings, header row always present) or JSON whose re-parse
and re-emission is byte-identical.

Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 I/O
error.
"""
from __future__ import annotations

import os

# Cap BLAS worker pools before any numeric import happens; the package
# keeps its __init__ lazy so this really does run first for console use.
_threads = os.environ.get("ESCAPE_SPECTRAL_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from . import asymptotics as asym
from . import closed_forms as cf
from .errors import NumericalError, ParameterError, ResourceLimitError
from .montecarlo import SimConfig, simulate_met
from .operator import DEFAULT_N_TRUNC, assemble_vtv, load_matrix, save_matrix
from .params import ModelParams, validate_params
from .spectral import decompose, met, met_limit

__all__ = ["RunConfig", "parse_config", "run", "main"]

COMMANDS = ("solve", "spectrum", "limit", "asymptotics", "closed-form", "simulate", "compare")
CLOSED_FORMS = ("surface", "bulk", "transportation", "point", "bounds", "d2crit", "diagonal")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one CLI invocation."""

    command: str
    params: ModelParams
    n_trunc: int = DEFAULT_N_TRUNC
    lambda_grid: Optional[Tuple[float, float, int, str]] = None
    output_path: Optional[str] = None
    fmt: str = "csv"
    which: Optional[str] = None
    n_terms: Optional[int] = None
    n_paths: int = 100_000
    seed: int = 0
    dt_surface: Optional[float] = None
    dt_bulk: Optional[float] = None
    bulk_mode: str = "exact-jump"
    start: Union[str, float] = "uniform"
    matrix_cache: Optional[str] = None


def _start_value(text: str) -> Union[str, float]:
    if text == "uniform":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"start must be 'uniform' or an angle, got {text!r}")


def _build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, Set[str]]]:
    parser = argparse.ArgumentParser(
        prog="escape-spectral",
        description="Mean exit times of surface-mediated diffusion from the unit disk.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(COMMANDS))
    known: Dict[str, Set[str]] = {}

    def add(sp, name, *args, **kwargs):
        sp.add_argument(*args, **kwargs)
        dest = sp._actions[-1].dest
        known[name].add(dest)

    def new_command(name, help_text, model=True, grid=False, rate=False, trunc=False):
        sp = sub.add_parser(name, help=help_text)
        known[name] = set()
        if model:
            add(sp, name, "--a", type=float, default=None, help="ejection distance, 0 < a <= 1")
            add(sp, name, "--eps", type=float, default=None, help="target half-width in radians")
            add(sp, name, "--d1", type=float, default=None, help="surface diffusivity (default 1)")
            add(sp, name, "--d2", type=float, default=None, help="bulk diffusivity (default 1)")
        if rate:
            add(sp, name, "--lam", type=float, default=None, help="desorption rate (default 0)")
        if grid:
            add(sp, name, "--lambda-lin", nargs=3, type=float, default=None,
                metavar=("MIN", "MAX", "COUNT"), help="linear rate grid")
            add(sp, name, "--lambda-log", nargs=3, type=float, default=None,
                metavar=("MIN", "MAX", "COUNT"), help="logarithmic rate grid")
        if trunc:
            add(sp, name, "--n", type=int, default=None,
                help=f"matrix truncation order (default {DEFAULT_N_TRUNC})")
        add(sp, name, "--output", default=None, help="output file (default stdout)")
        add(sp, name, "--format", choices=("csv", "json"), default=None, help="output format")
        add(sp, name, "--config", default=None, help="JSON config file; flags take precedence")
        return sp

    sp = new_command("solve", "mean exit time over a rate grid", grid=True, trunc=True)
    add(sp, "solve", "--matrix-cache", default=None, help="operator cache file to reuse or create")

    new_command("spectrum", "eigenvalues and spectral weights", trunc=True)
    new_command("limit", "large-rate limit and its correction coefficient", trunc=True)
    new_command("asymptotics", "power-law fit report", trunc=True)

    sp = new_command("closed-form", "closed-form values", rate=True)
    add(sp, "closed-form", "which", choices=CLOSED_FORMS, help="which closed form")
    add(sp, "closed-form", "--n-terms", type=int, default=None, help="series truncation")

    sp = new_command("simulate", "Monte Carlo estimate", rate=True)
    for args, kwargs in (
        (("--paths",), dict(type=int, default=None, help="number of paths")),
        (("--seed",), dict(type=int, default=None, help="RNG seed")),
        (("--dt",), dict(type=float, default=None, help="surface time step")),
        (("--dt-bulk",), dict(type=float, default=None, help="bulk time step (euler mode)")),
        (("--bulk-mode",), dict(choices=("exact-jump", "euler"), default=None)),
        (("--start",), dict(type=_start_value, default=None, help="'uniform' or an angle")),
    ):
        add(sp, "simulate", *args, **kwargs)

    sp = new_command("compare", "spectral vs diagonal vs Monte Carlo", grid=True, trunc=True)
    for args, kwargs in (
        (("--paths",), dict(type=int, default=None)),
        (("--seed",), dict(type=int, default=None)),
        (("--dt",), dict(type=float, default=None)),
        (("--dt-bulk",), dict(type=float, default=None)),
        (("--bulk-mode",), dict(choices=("exact-jump", "euler"), default=None)),
    ):
        add(sp, "compare", *args, **kwargs)

    return parser, known


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse flags (and an optional config file) into a RunConfig."""
    parser, known = _build_parser()
    args = parser.parse_args(argv)
    command = args.command

    if getattr(args, "config", None):
        with open(args.config) as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParameterError(f"{args.config}: invalid JSON ({exc})")
        if not isinstance(file_cfg, dict):
            raise ParameterError(f"{args.config}: config must be a JSON object")
        for key, value in file_cfg.items():
            dest = key.replace("-", "_")
            if dest not in known[command] or dest == "config":
                raise ParameterError(f"unknown config key {key!r} for command {command!r}")
            if getattr(args, dest) is None:
                setattr(args, dest, value)

    def take(name, default):
        value = getattr(args, name, None)
        return default if value is None else value

    needs_model = command != "closed-form" or take("which", None) not in (
        "bulk",
        "transportation",
    )
    a = take("a", None)
    eps = take("eps", None)
    if needs_model and (a is None or eps is None):
        raise ParameterError(f"command {command!r} requires --a and --eps")
    params = validate_params(
        ModelParams(
            a=1.0 if a is None else float(a),
            epsilon=0.0 if eps is None else float(eps),
            d1=float(take("d1", 1.0)),
            d2=float(take("d2", 1.0)),
            lam=float(take("lam", 0.0)),
        )
    )

    grid = None
    if command in ("solve", "compare"):
        lin = take("lambda_lin", None)
        log = take("lambda_log", None)
        if lin is not None and log is not None:
            raise ParameterError("--lambda-lin and --lambda-log are mutually exclusive")
        spec = lin if lin is not None else log
        if spec is None:
            raise ParameterError(f"command {command!r} requires a lambda grid")
        lo, hi, count = float(spec[0]), float(spec[1]), int(spec[2])
        if count < 1:
            raise ParameterError(f"grid count must be >= 1, got {count}")
        grid = (lo, hi, count, "lin" if lin is not None else "log")

    return RunConfig(
        command=command,
        params=params,
        n_trunc=int(take("n", DEFAULT_N_TRUNC)),
        lambda_grid=grid,
        output_path=take("output", None),
        fmt=take("format", "csv"),
        which=take("which", None),
        n_terms=take("n_terms", None),
        n_paths=int(take("paths", 100_000)),
        seed=int(take("seed", 0)),
        dt_surface=take("dt", None),
        dt_bulk=take("dt_bulk", None),
        bulk_mode=take("bulk_mode", "exact-jump"),
        start=take("start", "uniform"),
        matrix_cache=take("matrix_cache", None),
    )


def _grid_values(grid: Tuple[float, float, int, str]) -> List[float]:
    lo, hi, count, kind = grid
    if count == 1:
        return [lo]
    if kind == "lin":
        return [float(v) for v in np.linspace(lo, hi, count)]
    if lo <= 0:
        raise ParameterError(f"logarithmic grid requires a positive minimum, got {lo!r}")
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), count)]


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _emit(cfg: RunConfig, columns: List[str], rows: List[List]) -> None:
    if cfg.fmt == "json":
        payload = {"command": cfg.command, "columns": columns, "rows": rows}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])
        text = buf.getvalue()
    if cfg.output_path is None:
        sys.stdout.write(text)
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)


def _spectral_data(cfg: RunConfig):
    if cfg.matrix_cache and os.path.exists(cfg.matrix_cache):
        matrix = load_matrix(cfg.matrix_cache, cfg.params)
        if matrix.n_trunc != cfg.n_trunc:
            raise ParameterError(
                f"cache truncation {matrix.n_trunc} does not match requested {cfg.n_trunc}"
            )
    else:
        matrix = assemble_vtv(cfg.params, cfg.n_trunc)
        if cfg.matrix_cache:
            save_matrix(cfg.matrix_cache, matrix)
    return decompose(matrix)


def _run_solve(cfg: RunConfig) -> None:
    s = _spectral_data(cfg)
    rows = []
    for lam in _grid_values(cfg.lambda_grid):
        r = met(s, lam)
        rows.append([lam, r.value, r.residual_estimate])
    _emit(cfg, ["lambda", "met", "residual_estimate"], rows)


def _run_spectrum(cfg: RunConfig) -> None:
    s = _spectral_data(cfg)
    rows = [
        [n + 1, float(s.eigenvalues[n]), float(s.weights[n])] for n in range(s.n_trunc)
    ]
    _emit(cfg, ["n", "lambda_n", "psi_n_sq"], rows)


def _run_limit(cfg: RunConfig) -> None:
    s = _spectral_data(cfg)
    limit = met_limit(s)
    rows = [["limit_t", limit.value], ["residual_estimate", limit.residual_estimate]]
    try:
        c1 = asym.c1_coefficient(asym.fit_asymptotics(s), cfg.params)
        rows.append(["c1", c1])
    except (NumericalError, ParameterError):
        rows.append(["c1", ""])
    _emit(cfg, ["quantity", "value"], rows)


def _run_asymptotics(cfg: RunConfig) -> None:
    s = _spectral_data(cfg)
    fit = asym.fit_asymptotics(s)
    rows = []
    for name in ("a_eps", "a_tilde", "b_tilde", "b_prime", "b_eps", "c1"):
        value = getattr(fit, name)
        window = fit.fit_windows.get(name)
        rows.append(
            [
                name,
                "" if value is None else value,
                "" if window is None else window[0],
                "" if window is None else window[1],
                "" if name not in fit.residuals else fit.residuals[name],
            ]
        )
    _emit(cfg, ["coefficient", "value", "window_lo", "window_hi", "residual_rms"], rows)


def _run_closed_form(cfg: RunConfig) -> None:
    p = cfg.params
    which = cfg.which
    kw = {} if cfg.n_terms is None else {"n_terms": cfg.n_terms}
    if which == "surface":
        rows = [["met_surface", cf.met_surface_only(p).value]]
    elif which == "bulk":
        if p.epsilon == 0.0:
            raise ParameterError("closed-form bulk requires --eps > 0")
        rows = [["met_bulk", cf.met_bulk_only(p.epsilon, p.d2, **kw).value]]
    elif which == "transportation":
        rows = [["met_transportation", cf.met_transportation_limit(p.epsilon, p.d2).value]]
    elif which == "point":
        r = cf.met_point_target(p, **kw)
        rows = [["met_point", r.value], ["residual_estimate", r.residual_estimate]]
    elif which == "bounds":
        b = cf.bounds_point_target(p)
        rows = [["lower", b.lower], ["upper", b.upper]]
    elif which == "d2crit":
        rows = [["d2_crit", cf.d2_crit(p, **kw)]]
    elif which == "diagonal":
        r = cf.met_diagonal_approx(p, **kw)
        rows = [["met_diagonal", r.value], ["residual_estimate", r.residual_estimate]]
    else:
        raise ParameterError(f"unknown closed form {which!r}")
    _emit(cfg, ["quantity", "value"], rows)


def _sim_config(cfg: RunConfig, lam: Optional[float] = None) -> SimConfig:
    params = cfg.params if lam is None else dataclasses.replace(cfg.params, lam=lam)
    return SimConfig(
        params=params,
        n_paths=cfg.n_paths,
        dt_surface=cfg.dt_surface,
        seed=cfg.seed,
        start=cfg.start,
        bulk_mode=cfg.bulk_mode,
        dt_bulk=cfg.dt_bulk,
    )


def _run_simulate(cfg: RunConfig) -> None:
    est = simulate_met(_sim_config(cfg))
    _emit(
        cfg,
        ["mean", "stderr", "n_paths", "seed"],
        [[est.mean, est.stderr, est.n_paths, cfg.seed]],
    )


def _run_compare(cfg: RunConfig) -> None:
    s = _spectral_data(cfg)
    rows = []
    for lam in _grid_values(cfg.lambda_grid):
        spectral = met(s, lam).value
        diag = cf.met_diagonal_approx(
            dataclasses.replace(cfg.params, lam=lam),
            **({} if cfg.n_terms is None else {"n_terms": cfg.n_terms}),
        ).value
        est = simulate_met(_sim_config(cfg, lam))
        agree = abs(spectral - est.mean) <= 3.0 * est.stderr
        gap = (diag - spectral) / spectral if spectral != 0.0 else math.inf
        rows.append(
            [
                lam,
                spectral,
                diag,
                est.mean,
                est.stderr,
                "PASS" if agree else "FAIL",
                gap,
            ]
        )
    _emit(
        cfg,
        ["lambda", "met_spectral", "met_diagonal", "mc_mean", "mc_stderr", "mc_agree", "diag_rel_gap"],
        rows,
    )


_RUNNERS = {
    "solve": _run_solve,
    "spectrum": _run_spectrum,
    "limit": _run_limit,
    "asymptotics": _run_asymptotics,
    "closed-form": _run_closed_form,
    "simulate": _run_simulate,
    "compare": _run_compare,
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    _RUNNERS[cfg.command](cfg)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point mapping exceptions onto exit codes."""
    try:
        return run(parse_config(argv))
    except (ParameterError, ResourceLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
