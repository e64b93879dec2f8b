import math

import numpy as np
import pytest
from scipy.integrate import dblquad
from scipy.special import eval_legendre

from diskescape import (
    ModelParams,
    ParameterError,
    bounds_point_target,
    d2_crit,
    d2_crit_small_a_limit,
    met,
    met_bulk_only,
    met_diagonal_approx,
    met_point_target,
    met_surface_only,
    met_transportation_limit,
    sturm_liouville_eigenbasis,
)
from conftest import spectral_case


# ---------------------------------------------------------------- point target

def test_point_target_zero_rate_is_zeta_two():
    p = ModelParams(a=0.3, epsilon=0.0, d1=2.0)
    r = met_point_target(p)
    assert r.value == pytest.approx(math.pi**2 / (3.0 * 2.0), rel=1e-12)


def test_point_target_requires_point_target():
    with pytest.raises(ParameterError):
        met_point_target(ModelParams(a=0.3, epsilon=0.1))


@pytest.mark.parametrize("a", [0.01, 0.1])
@pytest.mark.parametrize("lam", [1e2, 1e3, 1e4])
def test_point_target_respects_bounds(a, lam):
    p = ModelParams(a=a, epsilon=0.0, lam=lam)
    v = met_point_target(p).value
    b = bounds_point_target(p)
    assert b.lower <= v <= b.upper


def test_bounds_rejections():
    with pytest.raises(ParameterError):
        bounds_point_target(ModelParams(a=1.0, epsilon=0.0, lam=10.0))
    with pytest.raises(ParameterError):
        bounds_point_target(ModelParams(a=0.5, epsilon=0.0, lam=0.0))
    with pytest.raises(ParameterError):
        bounds_point_target(ModelParams(a=0.5, epsilon=0.1, lam=1.0))


def test_lower_bound_leading_term():
    # lower / sqrt(lam) approaches pi (1-(1-a)^2) / (4 d2 sqrt(d1))
    a, d2 = 0.2, 1.5
    target = math.pi * (1.0 - (1.0 - a) ** 2) / (4.0 * d2)
    lam = 1e10
    b = bounds_point_target(ModelParams(a=a, epsilon=0.0, d2=d2, lam=lam))
    assert b.lower / math.sqrt(lam) == pytest.approx(target, rel=1e-4)


def test_upper_bound_scales_as_inverse_sqrt_a():
    lam = 1e3
    ratio = []
    for a in (0.99, 0.01):
        b = bounds_point_target(ModelParams(a=a, epsilon=0.0, lam=lam))
        g = 1.0 + lam * (1.0 - (1.0 - a) ** 2) / 4.0
        ratio.append(b.upper / g)
    assert ratio[1] / ratio[0] == pytest.approx(math.sqrt(0.99 / 0.01), rel=1e-12)


# ------------------------------------------------------------------- thresholds

def test_critical_coefficient_small_a_limit():
    limit = d2_crit_small_a_limit()
    assert limit == pytest.approx(math.pi**2 / (12.0 * 1.2020569031595943), rel=1e-12)
    v = d2_crit(ModelParams(a=1e-7, epsilon=0.0))
    assert v == pytest.approx(limit, rel=1e-6)


def test_critical_coefficient_monotone_toward_limit():
    vals = [d2_crit(ModelParams(a=a, epsilon=0.0)) for a in (0.1, 0.01, 0.001)]
    limit = d2_crit_small_a_limit()
    assert vals[0] < vals[1] < vals[2] < limit


def test_critical_coefficient_rejects_full_circle():
    with pytest.raises(ParameterError):
        d2_crit(ModelParams(a=0.5, epsilon=math.pi))


def test_critical_coefficient_matches_derivative_sign_change():
    # finite-difference oracle: the zero-rate slope flips sign at the threshold
    a = 0.5
    dc = d2_crit(ModelParams(a=a, epsilon=0.0))
    h = 1e-6
    for d2, positive in [(0.99 * dc, True), (1.01 * dc, False)]:
        lo = met_point_target(ModelParams(a=a, epsilon=0.0, d2=d2)).value
        hi = met_point_target(ModelParams(a=a, epsilon=0.0, d2=d2, lam=h)).value
        assert ((hi - lo) > 0) == positive


def test_critical_coefficient_extended_target_limit():
    # eps -> 0 of the extended formula approaches the point-target value
    p0 = d2_crit(ModelParams(a=0.3, epsilon=0.0))
    p1 = d2_crit(ModelParams(a=0.3, epsilon=1e-6))
    assert p1 == pytest.approx(p0, rel=1e-4)


# ----------------------------------------------------------------- surface/bulk

def test_surface_only_values():
    assert met_surface_only(ModelParams(a=0.5, epsilon=0.01)).value == pytest.approx(
        3.2586, abs=5e-5
    )
    assert met_surface_only(ModelParams(a=0.5, epsilon=math.pi)).value == 0.0
    assert met_surface_only(ModelParams(a=0.5, epsilon=0.0)).value == pytest.approx(
        math.pi**2 / 3.0, rel=1e-15
    )


def test_bulk_only_rejects_point_target():
    with pytest.raises(ParameterError):
        met_bulk_only(0.0)


def test_bulk_only_small_target_log_law():
    for eps in (0.01, 0.1):
        v = met_bulk_only(eps).value
        assert abs(v - math.log(2.0 / eps)) / v < eps


def test_bulk_only_matches_log_closed_form():
    # the cosine series integrates to zero over the half circle and the
    # boundary trace vanishes on the target, so the average collapses to
    # -ln sin(eps/2); the Legendre sum must reproduce this identity
    for eps in (0.1, 0.5, 1.0, 2.0):
        r = met_bulk_only(eps, n_terms=200_000)
        exact = -math.log(math.sin(eps / 2.0))
        assert r.value == pytest.approx(exact, abs=5.0 * r.residual_estimate + 1e-9)


def test_bulk_only_recurrence_matches_scipy_legendre():
    eps, n_terms = 0.35, 2000
    n = np.arange(1, n_terms + 1)
    x = math.cos(eps)
    series = float(
        np.sum(
            np.sin(n * eps)
            / (2.0 * n**2)
            * (eval_legendre(n, x) + eval_legendre(n - 1, x))
        )
    )
    expected = (-(math.pi - eps) * math.log(math.sin(eps / 2.0)) + series) / math.pi
    assert met_bulk_only(eps, n_terms=n_terms).value == pytest.approx(expected, rel=1e-13)


def test_bulk_only_decreasing_in_target_size():
    values = [met_bulk_only(e).value for e in (0.01, 0.1, 0.5, 1.0, 2.0, math.pi)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_transportation_values():
    assert met_transportation_limit(0.01).value == pytest.approx(78.2898, abs=1e-4)
    assert met_transportation_limit(0.1).value == pytest.approx(7.6040, abs=1e-4)
    assert met_transportation_limit(math.pi).value == 0.0
    with pytest.raises(ParameterError):
        met_transportation_limit(0.0)


# ----------------------------------------------------------- diagonal approximation

def test_diagonal_equals_point_series_at_zero_width():
    for lam in (0.0, 10.0, 1e4):
        p = ModelParams(a=0.2, epsilon=0.0, lam=lam)
        d = met_diagonal_approx(p, n_terms=10**5)
        r = met_point_target(p, n_terms=10**5)
        assert d.value == pytest.approx(r.value, rel=1e-12)


def test_diagonal_general_path_is_continuous_at_zero_width():
    p_eps = ModelParams(a=0.2, epsilon=1e-9, lam=10.0)
    p0 = ModelParams(a=0.2, epsilon=0.0, lam=10.0)
    assert met_diagonal_approx(p_eps).value == pytest.approx(
        met_point_target(p0).value, rel=1e-6
    )


def test_diagonal_tracks_spectral_at_moderate_rates():
    s = spectral_case(0.01, 0.01, 512)
    for lam in (1.0, 10.0, 100.0):
        d = met_diagonal_approx(ModelParams(a=0.01, epsilon=0.01, lam=lam)).value
        assert d == pytest.approx(met(s, lam).value, rel=0.02)


def test_diagonal_diverges_at_large_rates():
    # keeps growing like sqrt(lam) far beyond the true finite limit
    vals = [
        met_diagonal_approx(ModelParams(a=0.01, epsilon=0.01, lam=lam)).value
        for lam in (1e4, 1e6, 1e8)
    ]
    assert vals[0] < vals[1] < vals[2]
    from diskescape import met_limit

    limit = met_limit(spectral_case(0.01, 0.01, 1024)).value
    assert vals[-1] > 2.0 * limit


def test_diagonal_breakdown_clamps_with_residual():
    # for wider targets the bracket eventually turns negative; the result
    # is clamped at zero and the residual covers the discarded magnitude
    r = met_diagonal_approx(ModelParams(a=0.01, epsilon=0.1, lam=1e8))
    assert r.value == 0.0
    assert r.residual_estimate > 1.0


# ------------------------------------------------------------- eigenbasis modes

def test_eigenbasis_reference_values():
    assert sturm_liouville_eigenbasis(0.0, 0).eigenvalue == pytest.approx(4.0, rel=1e-15)
    assert sturm_liouville_eigenbasis(math.pi / 2.0, 1).eigenvalue == pytest.approx(
        (0.5) ** 2 / (1.5) ** 2, rel=1e-14
    )
    with pytest.raises(ParameterError):
        sturm_liouville_eigenbasis(math.pi, 0)
    with pytest.raises(ParameterError):
        sturm_liouville_eigenbasis(0.5, -1)


@pytest.mark.parametrize("eps, n", [(0.3, 0), (0.8, 2)])
def test_eigenbasis_satisfies_double_integration(eps, n):
    # applying the double-integration operator to the mode profile must
    # reproduce eigenvalue * profile (nested quadrature oracle)
    mode = sturm_liouville_eigenbasis(eps, n)
    edge = math.pi - eps
    for theta in (0.2, 0.9, edge * 0.95):
        val, err = dblquad(
            lambda t2, t1: mode.profile(t2),
            theta,
            edge,
            0.0,
            lambda t1: t1,
            epsabs=1e-11,
        )
        assert err < 1e-9
        assert val == pytest.approx(
            mode.eigenvalue * float(mode.profile(theta)), abs=5e-9
        )
