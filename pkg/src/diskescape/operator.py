"""Assembly of the truncated transfer operator in the cosine basis.

The escape problem reduces to a compact positive self-adjoint operator
acting on even functions of the angle.  In the basis {cos(n theta)},
n >= 1, the operator is represented by the dense symmetric matrix

    M[m, n] = (1/pi) s_m s_n * ( delta_mn (pi - eps + sin(2 n eps)/(2n)) / n^2
              - (1 - delta_mn) (-1)^(m+n)/(m n)
                * [ sin((m-n) eps)/(m-n) - sin((m+n) eps)/(m+n) ] )

with s_n = sqrt(1 - (1-a)^n).  The constant mode (index 0) is annihilated
and therefore excluded from the matrix.  The source vector needed for the
exit-time series is the list of inner products of psi with cos(m theta).

For eps = 0 every off-diagonal entry vanishes and the matrix is assembled
directly as diag((1 - (1-a)^n) / n^2); this avoids the 0/0 quotients of
the generic formula.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceLimitError
from .params import ModelParams, validate_params

__all__ = [
    "OperatorMatrix",
    "PsiProjection",
    "assemble_vtv",
    "psi_projection",
    "decay_factors",
    "save_matrix",
    "load_matrix",
    "DEFAULT_N_TRUNC",
    "DEFAULT_MAX_N_TRUNC",
]

DEFAULT_N_TRUNC = 2000
# Dense eigensolve cost grows as N^3; partial-sum extrapolation makes
# larger truncations unnecessary.
DEFAULT_MAX_N_TRUNC = 8000

_CACHE_MAGIC = b"VTVM"
_CACHE_VERSION = 1
# magic + version u32 + N u32 + reserved u32, little-endian, 16 bytes
_CACHE_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class OperatorMatrix:
    """Truncated symmetric matrix of the transfer operator.

    ``entries`` is an N x N read-only array indexed by m, n = 1..N
    (row/column 0 of the infinite matrix is identically zero and not
    stored).  Exact symmetry holds bitwise by construction.
    """

    n_trunc: int
    entries: np.ndarray
    params: ModelParams

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class PsiProjection:
    """Inner products of the source function psi with cos(m theta), m = 1..N.

    The component on the constant function is zero and not stored.
    """

    coords: np.ndarray

    def __post_init__(self):
        self.coords.setflags(write=False)


def decay_factors(a: float, n_trunc: int) -> np.ndarray:
    """Return 1 - (1-a)^n for n = 1..n_trunc.

    Computed by iterated multiplication; subnormal powers are flushed to
    zero, after which the factor is exactly 1.
    """
    powers = np.cumprod(np.full(n_trunc, 1.0 - a))
    powers[powers < np.finfo(float).tiny] = 0.0
    return 1.0 - powers


def _check_n_trunc(n_trunc: int, max_n_trunc: int) -> None:
    if n_trunc < 1:
        raise ParameterError(f"n_trunc must be >= 1, got {n_trunc}")
    if n_trunc > max_n_trunc:
        raise ResourceLimitError(
            f"n_trunc = {n_trunc} exceeds the configured cap {max_n_trunc} "
            f"({n_trunc}x{n_trunc} dense allocation refused)"
        )


def assemble_vtv(
    p: ModelParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    max_n_trunc: int = DEFAULT_MAX_N_TRUNC,
) -> OperatorMatrix:
    """Assemble the truncated operator matrix for parameters ``p``.

    Parameters
    ----------
    p : ModelParams
        Model parameters; ``epsilon`` may be zero.
    n_trunc : int
        Truncation order N (matrix is N x N).
    max_n_trunc : int
        Hard cap on N; larger requests raise ResourceLimitError.

    Notes
    -----
    The (m, n) and (n, m) entries are produced by identical floating
    point expressions, so the result is bitwise symmetric without any
    posthoc symmetrization.
    """
    validate_params(p)
    _check_n_trunc(n_trunc, max_n_trunc)
    n = np.arange(1.0, n_trunc + 1.0)
    fac = decay_factors(p.a, n_trunc)

    if p.epsilon == 0.0:
        entries = np.diag(fac / n**2)
        return OperatorMatrix(n_trunc=n_trunc, entries=entries, params=p)

    eps = p.epsilon
    s = np.sqrt(fac)
    diag = (np.pi - eps + np.sin(2.0 * n * eps) / (2.0 * n)) / n**2

    m_col = n[:, None]
    n_row = n[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        off = ((-1.0) ** (m_col + n_row) / (m_col * n_row)) * (
            np.sin((m_col - n_row) * eps) / (m_col - n_row)
            - np.sin((m_col + n_row) * eps) / (m_col + n_row)
        )
    entries = -off
    np.fill_diagonal(entries, diag)
    entries *= s[:, None] * s[None, :]
    entries *= 1.0 / np.pi
    return OperatorMatrix(n_trunc=n_trunc, entries=entries, params=p)


def psi_projection(p: ModelParams, n_trunc: int = DEFAULT_N_TRUNC) -> PsiProjection:
    """Inner products <psi, cos(m theta)> for m = 1..n_trunc.

    coords[m-1] = sqrt(1 - (1-a)^m) * (-1)^(m+1) / m^2
                  * [ (pi - eps) cos(m eps) + sin(m eps) / m ]
    """
    validate_params(p)
    if n_trunc < 1:
        raise ParameterError(f"n_trunc must be >= 1, got {n_trunc}")
    eps = p.epsilon
    m = np.arange(1.0, n_trunc + 1.0)
    s = np.sqrt(decay_factors(p.a, n_trunc))
    coords = s * ((-1.0) ** (m + 1.0) / m**2) * (
        (np.pi - eps) * np.cos(m * eps) + np.sin(m * eps) / m
    )
    return PsiProjection(coords=coords)


def save_matrix(path, matrix: OperatorMatrix) -> None:
    """Write a matrix cache file (16-byte header + row-major float64)."""
    header = _CACHE_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, matrix.n_trunc, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(matrix.entries, dtype="<f8").tobytes())


def load_matrix(path, params: ModelParams) -> OperatorMatrix:
    """Read a matrix cache file written by :func:`save_matrix`.

    The file stores only the matrix; the caller supplies the parameters
    it was assembled from (they are echoed into the result unchecked).
    """
    with open(path, "rb") as fh:
        header = fh.read(_CACHE_HEADER.size)
        if len(header) != _CACHE_HEADER.size:
            raise ParameterError(f"{path}: truncated cache header")
        magic, version, n_trunc, _reserved = _CACHE_HEADER.unpack(header)
        if magic != _CACHE_MAGIC:
            raise ParameterError(f"{path}: not an operator cache file")
        if version != _CACHE_VERSION:
            raise ParameterError(f"{path}: unsupported cache version {version}")
        data = np.frombuffer(fh.read(8 * n_trunc * n_trunc), dtype="<f8")
    if data.size != n_trunc * n_trunc:
        raise ParameterError(f"{path}: truncated cache payload")
    entries = data.astype(float).reshape(n_trunc, n_trunc)
    return OperatorMatrix(n_trunc=n_trunc, entries=entries, params=params)
