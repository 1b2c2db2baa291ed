from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from logflow_lab import exactsol as E
from logflow_lab.errors import DomainError, ExtrapolationError
from logflow_lab.grid import Grid, ScalarField


@pytest.fixture(scope="module")
def profile():
    return E.cached_profile()


# ---------------------------------------------------------------------------
# line soliton

def test_line_soliton_values():
    assert E.line_soliton(0.0, 1.0) == 2.0
    assert E.line_soliton(1.0, 1.0) == 1.0


@pytest.mark.parametrize("t", [0.01, 0.5, 1.0, 7.0])
def test_line_soliton_slice_mass_is_two_pi(t):
    val, _ = integrate.quad(lambda x: E.line_soliton(x, t), -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)
    assert val == pytest.approx(2 * math.pi, rel=1e-10)


@pytest.mark.parametrize("c", [0.5, 2.0, 8.0])
def test_scaled_line_soliton_has_mass_two_pi_c(c):
    val, _ = integrate.quad(lambda x: E.line_soliton(x, 0.3, c), -np.inf, np.inf, epsabs=1e-12)
    assert val == pytest.approx(2 * math.pi * c, rel=1e-10)


def test_line_soliton_rejects_nonpositive_time():
    for t in (0.0, -1.0):
        with pytest.raises(DomainError):
            E.line_soliton(0.0, t)
        with pytest.raises(DomainError):
            E.line_soliton_curvature(0.0, t)


def _log_laplacian_1d(u, x, h):
    return (np.log(u(x + h)) - 2 * np.log(u(x)) + np.log(u(x - h))) / (h * h)


@pytest.mark.parametrize("c", [1.0, 3.0])
def test_line_soliton_solves_the_pde(c):
    # central differences in t and x; the residual falls at second order
    x = np.linspace(-3, 3, 13)
    t = 0.7
    res = []
    for h in (1e-2, 5e-3):
        ut = (E.line_soliton(x, t + h, c) - E.line_soliton(x, t - h, c)) / (2 * h)
        lap = _log_laplacian_1d(lambda z: E.line_soliton(z, t, c), x, h)
        res.append(np.max(np.abs(ut - lap)))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)


def test_line_soliton_time_derivative_closed_form():
    x, t = 0.4, 0.9
    h = 1e-5
    ut = (E.line_soliton(x, t + h) - E.line_soliton(x, t - h)) / (2 * h)
    assert ut == pytest.approx(2 * (x * x - t * t) / (t * t + x * x) ** 2, rel=1e-8)


def test_curvature_examples():
    assert E.line_soliton_curvature(0.0, 1.0) == 0.5
    assert E.line_soliton_curvature(1.0, 1.0) == 0.0
    assert E.line_soliton_curvature(1e8, 1.0) == pytest.approx(-0.5, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5])
def test_curvature_at_time_one_matches_classical_formula(x):
    assert E.line_soliton_curvature(x, 1.0) == pytest.approx(0.5 * (1 - x * x) / (1 + x * x), rel=1e-14)


@pytest.mark.parametrize("x,t", [(0.0, 0.5), (0.4, 1.3), (2.0, 0.2)])
def test_curvature_matches_minus_log_laplacian_over_2u(x, t):
    h = 1e-4
    u = lambda z: E.line_soliton(z, t)
    K = -_log_laplacian_1d(u, np.array(x), h) / (2 * u(x))
    assert E.line_soliton_curvature(x, t) == pytest.approx(float(K), abs=1e-5 / t)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_curvature_window(x, t):
    K = E.line_soliton_curvature(x, t)
    assert -1 / (2 * t) < K <= 1 / (2 * t) * (1 + 1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_curvature_maximum_on_axis(t):
    assert E.line_soliton_curvature(0.0, t) == pytest.approx(1 / (2 * t), rel=1e-15)


# ---------------------------------------------------------------------------
# hyperbolic factors

def test_poincare_disc_examples():
    assert E.poincare_disc_factor((0.0, 0.0), 1.0) == 4.0
    assert E.poincare_disc_factor((0.0, 0.0), 2.0) == 1.0
    r = np.array([0.0, 0.5, 0.9, 0.99, 0.999])
    vals = E.poincare_disc_factor(np.column_stack([r, 0 * r]), 1.0)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 1e6


def test_poincare_disc_rejects_points_outside():
    with pytest.raises(DomainError):
        E.poincare_disc_factor((1.0, 0.0), 1.0)


def test_poincare_disc_has_curvature_minus_one():
    # K = -Delta log h / (2h) with Delta log h radial: h'' + h'/r
    r, h = 0.37, 1e-4
    logh = lambda rr: math.log(E.poincare_disc_factor((rr, 0.0)))
    lap = (logh(r + h) - 2 * logh(r) + logh(r - h)) / h ** 2 + (logh(r + h) - logh(r - h)) / (2 * h * r)
    assert -lap / (2 * E.poincare_disc_factor((r, 0.0))) == pytest.approx(-1.0, rel=1e-6)


def test_hyperbolic_complement_examples():
    assert E.hyperbolic_complement_factor(math.e) == pytest.approx(math.exp(-2), rel=1e-15)
    assert E.hyperbolic_complement_factor(math.e ** 2) == pytest.approx(1 / (4 * math.e ** 4), rel=1e-14)
    with pytest.raises(DomainError):
        E.hyperbolic_complement_factor(1.0)


@pytest.mark.parametrize("r_in,R", [(2.0, 1.0), (2.0, 1.5), (5.0, 1.0)])
def test_hyperbolic_complement_area_is_finite_and_matches_closed_form(r_in, R):
    area = E.hyperbolic_complement_area(r_in, R)
    assert math.isfinite(area)
    assert area == pytest.approx(2 * math.pi / math.log(r_in / R), rel=1e-10)


# ---------------------------------------------------------------------------
# half-plane profile

def test_profile_ode_residual(profile):
    assert profile.residual_max <= 1e-8


def test_profile_strictly_decreasing(profile):
    # F - 1 ~ erfc(s/2) drops below double precision past s ~ 12; dF carries the sign there
    assert np.all(profile.dF < 0)
    resolved = profile.F[:-1] - 1.0 > 1e-13
    assert resolved.sum() > 0.5 * profile.F.size
    assert np.all(np.diff(profile.F)[resolved] < 0)
    assert np.all(np.diff(profile.F) <= 0)


def test_profile_above_both_barriers(profile):
    s = profile.s
    assert np.all(profile.F >= 1.0)
    assert np.all(profile.F >= 2.0 / s ** 2)
    assert np.all(profile.F[profile.s < 10] > 1.0)


def test_profile_limits(profile):
    assert abs(float(profile(profile.s_max)) - 1.0) <= 1e-6
    q = profile.F * profile.s ** 2 / 2
    assert abs(q[0] - 1.0) < 1e-3
    assert abs(float(profile(0.05)) * 0.05 ** 2 / 2 - 1.0) <= 0.05


def test_profile_inner_correction_exponent(profile):
    # linearising (log F)'' = -(s/2) F' about 2/s^2 gives F s^2/2 - 1 ~ A s^sqrt(2)
    keep = profile.s <= 0.03
    s = profile.s[keep]
    q = profile.F[keep] * s ** 2 / 2 - 1.0
    slope = np.polyfit(np.log(s), np.log(q), 1)[0]
    assert slope == pytest.approx(math.sqrt(2), rel=2e-3)


def test_profile_ode_by_finite_differences(profile):
    s = np.array([0.2, 0.5, 1.0, 2.0, 4.0])
    h = 1e-3 * s
    G = lambda z: np.log(profile(z))
    G2 = (G(s + h) - 2 * G(s) + G(s - h)) / h ** 2
    F1 = (profile(s + h) - profile(s - h)) / (2 * h)
    assert np.all(np.abs(G2 + 0.5 * s * F1) <= 1e-5 * np.maximum(1, np.abs(G2)))


def test_profile_solves_the_pde_as_halfplane_flow(profile):
    sol = E.HalfPlaneProfile(profile)
    y, t, h = 0.8, 0.5, 1e-4
    ut = (sol.evaluate(0.0, y, t + h) - sol.evaluate(0.0, y, t - h)) / (2 * h)
    lu = lambda yy: math.log(float(sol.evaluate(0.0, yy, t)))
    lap = (lu(y + h) - 2 * lu(y) + lu(y - h)) / h ** 2
    assert float(ut) == pytest.approx(lap, rel=1e-5)


def test_profile_csv_round_trip(profile, tmp_path):
    path = tmp_path / "F.csv"
    profile.to_csv(path)
    back = E.ProfileF.from_csv(path)
    np.testing.assert_array_equal(back.s, profile.s)
    np.testing.assert_array_equal(back.F, profile.F)
    assert back.s_max == profile.s_max
    assert back.tol == profile.tol
    head = path.read_text().splitlines()[:2]
    assert head[0].startswith("# s_max=")
    assert head[1] == "s,F"


def test_profile_rejects_short_outer_range():
    with pytest.raises(DomainError):
        E.solve_halfplane_profile(s_max=3.0)
    with pytest.raises(DomainError):
        E.solve_halfplane_profile(tol=0.0)


# ---------------------------------------------------------------------------
# self-similar evaluation

def _u1(x, y):
    # anisotropic, non-radial test field
    return (1.0 + 0.2 * x + 0.3 * x * y) * np.exp(-0.1 * (x * x + y * y)) + 0.5


def test_selfsimilar_identity_at_time_one():
    x, y = np.array([0.3, -1.2]), np.array([0.7, 0.1])
    for e in (E.Translating(_u1), E.DilatingRotating(2.0, 1.0, _u1)):
        np.testing.assert_allclose(E.eval_selfsimilar(e, (x, y), 1.0), _u1(x, y), rtol=1e-15)


@pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
def test_line_soliton_as_dilating_soliton(t):
    e = E.DilatingRotating(1.0, 0.0, lambda x, y: 2.0 / (1.0 + x * x))
    x = np.linspace(-3, 3, 31)
    np.testing.assert_allclose(E.eval_selfsimilar(e, (x, 0 * x + 0.4), t), E.line_soliton(x, t), rtol=1e-13)


@pytest.mark.parametrize("t", [0.01, 1.0, 50.0])
def test_trivial_translating_soliton_is_static(t):
    e = E.Translating(lambda x, y: np.exp(x))
    x = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(E.eval_selfsimilar(e, (x, 0 * x), t), np.exp(x), rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.05, 20.0), st.floats(0.2, 3.0), st.floats(-2.0, 2.0),
       st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_selfsimilar_composition(t1, t2, alpha, beta, x, y):
    # treating the time-t1 field as a new time-1 field and flowing by t2 lands at t1*t2
    e = E.DilatingRotating(alpha, beta, _u1)
    e1 = E.DilatingRotating(alpha, beta, lambda a, b: E.eval_selfsimilar(e, (a, b), t1))
    assert E.eval_selfsimilar(e1, (x, y), t2) == pytest.approx(
        float(E.eval_selfsimilar(e, (x, y), t1 * t2)), rel=1e-10)
    tr = E.Translating(_u1)
    tr1 = E.Translating(lambda a, b: E.eval_selfsimilar(tr, (a, b), t1))
    assert E.eval_selfsimilar(tr1, (x, y), t2) == pytest.approx(
        float(E.eval_selfsimilar(tr, (x, y), t1 * t2)), rel=1e-10)


def test_logpolar_chart_matches_cartesian_pullback():
    alpha, beta, t = 2.0, 1.0, 0.3
    cart = E.DilatingRotating(alpha, beta, _u1)
    # w = r^2 u in the chart (s, theta)
    w1 = lambda s, th: np.exp(2 * s) * _u1(np.exp(s) * np.cos(th), np.exp(s) * np.sin(th))
    lp = E.DilatingRotating(alpha, beta, w1, chart="logpolar")
    s, th = 0.2, 0.9
    r = math.exp(s)
    u = E.eval_selfsimilar(cart, (r * math.cos(th), r * math.sin(th)), t)
    assert r * r * u == pytest.approx(float(E.eval_selfsimilar(lp, (s, th), t)), rel=1e-12)


def test_selfsimilar_extrapolation_error():
    g = Grid(17, 17, -1, 1, -1, 1)
    e = E.Translating(ScalarField.from_function(g, lambda x, y: 1.0 + 0 * x))
    with pytest.raises(ExtrapolationError):
        E.eval_selfsimilar(e, (0.0, 0.0), 100.0)


@pytest.mark.parametrize("sol,point", [(E.Constant(2.0), (0.3, 0.1)),
                                       (E.LineSoliton(3.0, 0.5), (1.9, 0.3)),
                                       (E.BigBangDisc(1.5, (0.1, 0.2)), (0.5, 0.3)),
                                       (E.HyperbolicComplement(1.0), (1.9, 0.3))])
def test_solution_dict_round_trip(sol, point):
    back = E.solution_from_dict(sol.to_dict())
    assert back.to_dict() == sol.to_dict()
    assert float(back.evaluate(*point, 0.2)) == float(sol.evaluate(*point, 0.2))


def test_big_bang_disc_is_linear_in_time():
    sol = E.BigBangDisc(1.0)
    assert float(sol.evaluate(0.3, 0.1, 0.4)) == pytest.approx(2 * float(sol.evaluate(0.3, 0.1, 0.2)), rel=1e-15)
    assert float(sol.evaluate(0.0, 0.0, 0.5)) == pytest.approx(4.0, rel=1e-15)
