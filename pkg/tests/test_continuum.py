import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from scramble_bound import continuum
from scramble_bound.continuum import ContinuumProfile, QuadratureSpec
from scramble_bound.errors import QuadratureError

WIDTH = math.pi


@pytest.fixture(scope="module")
def profile():
    return ContinuumProfile.build(WIDTH)


def direct_convolution(t, width):
    """Unnormalized g*g by scipy quadrature around the peak at t/2."""
    a = math.pi / width
    f = lambda y: math.exp(-2 * math.cosh(a * y) - 2 * math.cosh(a * (t - y)))
    lo, hi = t / 2 - 12 / a, t / 2 + 12 / a
    return integrate.quad(f, lo, hi, points=[t / 2], epsabs=0, epsrel=1e-13, limit=400)[0]


# --- profile and normalization ------------------------------------------------------


def test_profile_closed_forms(profile):
    a = profile.rate
    assert profile.norm_sq == pytest.approx(2 / a * special.k0(4.0), rel=1e-13)
    assert profile.int_g == pytest.approx(2 / a * special.k0(2.0), rel=1e-13)
    assert profile.c_normalized == pytest.approx(profile.c_const / profile.norm_sq)


@pytest.mark.parametrize("width", [0.3, 1.0, 7.5])
def test_profile_scales_with_width(width):
    p = ContinuumProfile.build(width)
    assert p.norm_sq == pytest.approx(2 * width / math.pi * special.k0(4.0), rel=1e-12)


def test_profile_modulus_in_strip():
    t = np.linspace(-3, 3, 61)
    assert np.all(continuum.g_modulus_strip(t, 0.7, WIDTH) <= 1.0)
    np.testing.assert_allclose(continuum.g_modulus_strip(t, 0.0, WIDTH), continuum.g(t, WIDTH))
    with pytest.warns(RuntimeWarning):
        continuum.g_modulus_strip(t, WIDTH / 2, WIDTH)


def test_profile_rejects_bad_width():
    with pytest.raises(ValueError):
        ContinuumProfile.build(0.0)
    with pytest.raises(ValueError):
        continuum.log_g(1.0, -1.0)


# --- self-convolution -------------------------------------------------------------


def test_self_convolution_at_zero_is_one(profile):
    value, log_value = continuum.self_convolution(0.0, profile)
    assert value == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("t", [0.5, 1.9, 4.0, 8.0])
def test_self_convolution_against_scipy(profile, t):
    expected = direct_convolution(t, WIDTH) / profile.norm_sq
    value, log_value = continuum.self_convolution(t, profile)
    assert log_value == pytest.approx(math.log(expected), rel=1e-10)


def test_self_convolution_closed_form_order_two(profile):
    # g*g(t) = int exp(-4 cosh(a t/2) cosh(a u)) du = (2/a) K0(4 cosh(a t/2))
    a = profile.rate
    for t in (0.3, 2.0, 5.0):
        k = special.k0e(4 * math.cosh(a * t / 2))
        expected = math.log(2 / a * k) - 4 * math.cosh(a * t / 2) - math.log(profile.norm_sq)
        assert continuum.self_convolution(t, profile)[1] == pytest.approx(expected, rel=1e-12)


def test_self_convolution_at_reference_time(profile):
    value, _ = continuum.self_convolution(1.9, profile)
    assert value**2 == pytest.approx(0.0139976, rel=1e-5)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 20))
def test_self_convolution_properties(profile, t):
    value, log_value = continuum.self_convolution(t, profile)
    neg, _ = continuum.self_convolution(-t, profile)
    assert 0 <= value <= 1 + 1e-13
    assert neg == pytest.approx(value, rel=1e-12, abs=0)


def test_self_convolution_stable_under_refinement(profile):
    ts = np.linspace(0, 12, 25)
    _, coarse = continuum.self_convolution(ts, profile)
    _, halved = continuum.self_convolution(ts, profile, continuum.DEFAULT_QUAD.refined())
    _, fine = continuum.self_convolution(ts, profile, QuadratureSpec(order=30, tol=1e-14))
    np.testing.assert_allclose(np.exp(coarse[ts <= 6] - halved[ts <= 6]), 1.0, rtol=1e-7)
    np.testing.assert_allclose(coarse, fine, rtol=1e-11)


def test_self_convolution_deep_tail_is_finite(profile):
    _, log_value = continuum.self_convolution(60.0, profile)
    assert math.isfinite(log_value) and log_value < -1e10


def test_quadrature_error_when_budget_exhausted(profile):
    quad = QuadratureSpec(order=2, tol=1e-16, panels=1, max_doublings=1)
    with pytest.raises(QuadratureError):
        continuum.self_convolution(1.0, profile, quad)


def test_quadrature_refined_halves_tolerance():
    q = QuadratureSpec()
    assert q.refined().tol == q.tol / 2


# --- decay envelope -------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 1.0, 3.0, 6.0, 10.0])
def test_normalized_envelope_holds(profile, t):
    rep = continuum.decay_envelope_check(t, profile)
    assert rep.holds_normalized and rep.slack_normalized >= -1e-9


def test_literal_envelope_constant_is_too_small_at_origin(profile):
    # the unnormalized constant sits below N(0) = 1 once g(0) is included
    rep = continuum.decay_envelope_check(0.0, profile)
    assert not rep.holds


def test_double_exponential_slope_against_scipy(profile):
    ts = np.linspace(3, 6, 13)
    logs = [math.log(direct_convolution(t, WIDTH) / profile.norm_sq) for t in ts]
    expected = np.polyfit(ts, np.log(-np.array(logs)), 1)[0]
    assert continuum.double_exponential_slope(profile) == pytest.approx(expected, rel=1e-8)


def test_double_exponential_slope_approaches_half_rate(profile):
    far = continuum.double_exponential_slope(profile, t_lo=20, t_hi=40, points=21)
    assert far == pytest.approx(profile.rate / 2, rel=0.02)


# --- inverse Fourier transform and density ---------------------------------------------


@pytest.mark.parametrize("energy", [0.0, 0.5, 2.0, 7.5, 20.0, 40.0])
def test_g_hat_against_bessel_k(profile, energy):
    a = profile.rate
    with mpmath.workdps(40):
        exact = mpmath.besselk(1j * energy / a, 2).real / (math.pi * a)
        log_exact = float(mpmath.log(abs(exact)))
        sign = float(mpmath.sign(exact))
    log_abs, got_sign = continuum.log_abs_g_hat(energy, profile)
    assert log_abs == pytest.approx(log_exact, abs=1e-9)
    assert got_sign == sign


def test_density_mass_symmetry_and_positivity(profile):
    energies, dos = continuum.dos_grid(profile, spacing=0.05)
    assert np.all(dos >= 0)
    np.testing.assert_allclose(dos, dos[::-1])
    assert float(np.trapezoid(dos, energies)) == pytest.approx(1.0, abs=1e-6)


def test_density_variance_matches_derivative_identity(profile):
    # sigma^2 = ||g'||^2 / ||g||^2 = -N''(0)
    a = profile.rate
    gp2 = integrate.quad(lambda t: (2 * a * math.sinh(a * t)) ** 2 * math.exp(-4 * math.cosh(a * t)),
                         -12 / a, 12 / a, points=[0.0], epsabs=0, epsrel=1e-13, limit=400)[0]
    energies, dos = continuum.dos_grid(profile, spacing=0.025)
    sigma_sq = float(np.trapezoid(energies**2 * dos, energies))
    assert sigma_sq == pytest.approx(gp2 / profile.norm_sq, rel=1e-6)
    h = 1e-3
    n_h = continuum.self_convolution(h, profile)[0]
    assert sigma_sq == pytest.approx(2 * (1 - n_h) / h**2, rel=1e-4)
    assert sigma_sq == pytest.approx(1.1186256, rel=1e-6)


def test_density_local_maxima_decay_exponentially(profile):
    # |g_hat|^2 ~ exp(-pi E / a) times an oscillation; fit its local maxima
    es = np.linspace(10, 20, 801)
    _, logs = continuum.inverse_fourier_dos(es, profile)
    peaks = np.where((logs[1:-1] > logs[:-2]) & (logs[1:-1] > logs[2:]))[0] + 1
    assert peaks.size >= 3
    slope = np.polyfit(es[peaks], logs[peaks], 1)[0]
    assert slope == pytest.approx(-math.pi / profile.rate, rel=0.05)


def test_discretized_dos_is_normalized(profile):
    dos = continuum.discretized_dos(profile, spacing=0.1, e_max=10)
    assert dos.weights.sum() == pytest.approx(1.0)
    assert dos.beta is None and dos.f_beta == 1.0
    assert dos.energies[0] == pytest.approx(-10) and dos.energies[-1] == pytest.approx(10)


def test_discretized_dos_characteristic_function_tracks_ntilde(profile):
    dos = continuum.discretized_dos(profile, spacing=0.025)
    ts = np.array([0.5, 1.0, 1.9])
    ntilde, _ = continuum.self_convolution(ts, profile)
    np.testing.assert_allclose(dos.char(ts).real, ntilde, atol=1e-6)


@pytest.mark.slow
def test_gaussian_reference_deviation(profile):
    comp = continuum.gaussian_reference(profile, times=np.array([1.9]))
    assert comp.mass == pytest.approx(1.0, abs=1e-6)
    assert 0.05 < comp.relative_deviation[0] < 0.2


# --- continuum time bound -----------------------------------------------------------------


def test_continuum_time_trivial_for_tiny_system():
    p = ContinuumProfile(1.0, 1.0, 0.01)
    out = continuum.continuum_ts_upper(2, 0.01, 0.1, p)
    assert out.t_upper == "trivial"


def test_continuum_time_doubles_with_width():
    a = continuum.continuum_ts_upper(2**20, 0.1, 1.0, ContinuumProfile.build(1.0))
    b = continuum.continuum_ts_upper(2**20, 0.1, 1.0, ContinuumProfile.build(2.0))
    # the constant C also scales with the width, so the ratio is only asymptotically 2
    assert b.t_upper / a.t_upper == pytest.approx(2.0, rel=0.05)
    assert b.leading == pytest.approx(2 * a.leading)


def test_continuum_time_approaches_leading_order(profile):
    ratios = [continuum.continuum_ts_upper(2**n, 0.1, 1.0, profile) for n in (10, 100, 10000)]
    r = [c.t_upper / c.leading for c in ratios]
    assert abs(r[-1] - 1) < abs(r[0] - 1)
    assert r[-1] == pytest.approx(1.0, abs=0.05)


def test_continuum_time_validation(profile):
    with pytest.raises(ValueError):
        continuum.continuum_ts_upper(1, 0.1, 1.0, profile)
    with pytest.raises(ValueError):
        continuum.continuum_ts_upper(4, 0.0, 1.0, profile)


def test_continuum_time_ratio_to_entropy_form_tends_to_two(profile):
    ratios = []
    for n_s in (10**3, 10**4, 10**5, 10**6):
        out = continuum.continuum_ts_upper(2**n_s, 0.1, 1.0, profile)
        s2 = n_s * math.log(2.0)
        ratios.append(out.t_upper / (profile.width / math.pi * math.log(s2)))
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert 2.0 < ratios[-1] < 2.02
