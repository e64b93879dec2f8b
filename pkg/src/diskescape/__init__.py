"""Mean exit times of surface-mediated diffusion from the unit disk.

A particle alternates Brownian phases on the unit circle and in the
disk, switching at an exponential desorption rate, until it reaches an
absorbing arc.  The library computes its mean exit time through a
spectral decomposition of the underlying self-adjoint transfer operator,
provides every relevant closed form and asymptotic regime, and
cross-checks the results with a direct Monte Carlo simulation.

Submodules are imported lazily so the command line tool can cap BLAS
threads before the first numpy import.
"""
import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "ModelParams": "params",
    "MetResult": "params",
    "MetCurve": "params",
    "validate_params": "params",
    "ParameterError": "errors",
    "NumericalError": "errors",
    "ResourceLimitError": "errors",
    "OperatorMatrix": "operator",
    "PsiProjection": "operator",
    "assemble_vtv": "operator",
    "psi_projection": "operator",
    "decay_factors": "operator",
    "save_matrix": "operator",
    "load_matrix": "operator",
    "SpectralData": "spectral",
    "PartialSumFit": "spectral",
    "decompose": "spectral",
    "met": "spectral",
    "met_limit": "spectral",
    "met_curve": "spectral",
    "extrapolate_partial_sums": "spectral",
    "find_optimal_lambda": "spectral",
    "BoundsPair": "closed_forms",
    "SturmLiouvilleMode": "closed_forms",
    "met_point_target": "closed_forms",
    "bounds_point_target": "closed_forms",
    "d2_crit": "closed_forms",
    "d2_crit_small_a_limit": "closed_forms",
    "met_surface_only": "closed_forms",
    "met_bulk_only": "closed_forms",
    "met_transportation_limit": "closed_forms",
    "met_diagonal_approx": "closed_forms",
    "sturm_liouville_eigenbasis": "closed_forms",
    "AsymptoticFit": "asymptotics",
    "PowerLawFit": "asymptotics",
    "fit_eigenvalue_regimes": "asymptotics",
    "fit_weight_regimes": "asymptotics",
    "fit_asymptotics": "asymptotics",
    "c1_coefficient": "asymptotics",
    "check_log_divergence": "asymptotics",
    "SimConfig": "montecarlo",
    "SimEstimate": "montecarlo",
    "simulate_met": "montecarlo",
    "bulk_excursion_exact": "montecarlo",
    "convergence_study": "montecarlo",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(importlib.import_module(f".{module}", __name__), name)


def __dir__():
    return __all__
