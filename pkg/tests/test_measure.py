from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from logflow_lab import measure as M
from logflow_lab.errors import ConfigurationError, DomainError
from logflow_lab.geometry import weak_pairing
from logflow_lab.grid import Grid, integrate as grid_integrate, rect_weights
from logflow_lab.solver import FlowState


def line_measure(domain, weight=2 * math.pi):
    return M.MeasureSpec((M.vertical_line(0.0, weight),), M.Rect(*domain))


def lebesgue_plus_line(domain=(-2.0, 2.0, -2.0, 2.0)):
    d = M.Rect(*domain)
    return M.MeasureSpec((M.lebesgue(d), M.vertical_line(0.0, 1.0)), d)


# ---------------------------------------------------------------------------
# eval_mollified_density

@pytest.mark.parametrize("sigma", [0.1, 0.05, 0.02])
def test_line_peak_matches_gaussian_line_integral(sigma):
    m = line_measure((-1, 1, -1, 1), weight=1.0)
    val = M.eval_mollified_density(m, M.MollifierSpec("gaussian", sigma), (0.0, 0.0))
    assert val == pytest.approx(1 / (sigma * math.sqrt(2 * math.pi)), rel=1e-9)
    # independent route: integrate the 2-D kernel along the line
    k = M.MollifierSpec("gaussian", sigma)
    quad, _ = integrate.quad(lambda y: float(k.kernel2d(np.array(abs(y)))), -1, 1,
                             epsabs=1e-14, epsrel=1e-12, points=[0.0])
    assert val == pytest.approx(quad, rel=1e-8)


def test_empty_measure_returns_background():
    m = M.MeasureSpec((), M.Rect(-1, 1, -1, 1))
    k = M.MollifierSpec("gaussian", 0.1, background=0.25)
    for p in [(0.0, 0.0), (0.7, -0.3), (-1.0, 1.0)]:
        assert M.eval_mollified_density(m, k, p) == 0.25


@pytest.mark.parametrize("sigma", [0.2, 0.05])
def test_atom_peak(sigma):
    m = M.MeasureSpec((M.Atom((0.0, 0.0), 1.0),), M.Rect(-1, 1, -1, 1))
    val = M.eval_mollified_density(m, M.MollifierSpec("gaussian", sigma), (0.0, 0.0))
    assert val == pytest.approx(1 / (2 * math.pi * sigma ** 2), rel=1e-12)


def test_point_outside_domain_raises():
    m = line_measure((-1, 1, -1, 1))
    with pytest.raises(DomainError):
        M.eval_mollified_density(m, M.MollifierSpec(), (2.0, 0.0))


def test_invalid_mollifier_rejected():
    with pytest.raises(ConfigurationError):
        M.MollifierSpec("gaussian", -0.1)
    with pytest.raises(ConfigurationError):
        M.MollifierSpec("boxcar", 0.1)


@pytest.mark.parametrize("kernel", ["gaussian", "bump"])
def test_kernels_have_unit_mass(kernel):
    k = M.MollifierSpec(kernel, 0.1)
    r_max = k.support
    mass, _ = integrate.quad(lambda r: 2 * math.pi * r * float(k.kernel2d(np.array(r))), 0, r_max,
                             epsabs=1e-13, limit=200)
    assert mass == pytest.approx(1.0, rel=1e-9)


# ---------------------------------------------------------------------------
# mollify_to_field

def test_uniform_density_mollifies_to_constant():
    d = M.Rect(-1, 1, -1, 1)
    m = M.MeasureSpec((M.lebesgue(d),), d)
    g = Grid(21, 21, -1, 1, -1, 1)
    f = M.mollify_to_field(m, M.MollifierSpec("gaussian", 0.1), g)
    np.testing.assert_allclose(f.values, 1.0, rtol=1e-12)


def test_line_field_mass_matches_gaussian_strip_integral():
    sigma = 0.1
    m = line_measure((-2, 2, -2, 2))
    g = Grid(401, 401, -2, 2, -2, 2)
    f = M.mollify_to_field(m, M.MollifierSpec("gaussian", sigma), g)
    mass = grid_integrate(f.values, rect_weights(g, (-2, 2, -2, 2)))
    # x: erf(2/(sigma sqrt 2)); y: the clipped line loses sigma/sqrt(2 pi) at each end
    expected = (2 * math.pi * special.erf(2 / (sigma * math.sqrt(2)))
                * (4 - 2 * sigma / math.sqrt(2 * math.pi)))
    assert mass == pytest.approx(expected, rel=2e-4)


def test_lebesgue_plus_line_slice_mass_is_three():
    m = lebesgue_plus_line()
    g = Grid(401, 41, -2, 2, -2, 2)
    f = M.mollify_to_field(m, M.MollifierSpec("gaussian", 0.05), g)
    j = 20  # y = 0
    x = g.x
    keep = np.abs(x) <= 1 + 1e-12
    slice_mass = np.trapezoid(f.values[keep, j], x[keep])
    assert slice_mass == pytest.approx(3.0, rel=1e-3)


def test_periodic_strip_line_is_not_clipped_at_cell_edges():
    # the line continues through the periodic y axis, so every row sees the full profile
    g = Grid.periodic(201, 16, -2, 2, -0.16, 0.32)
    m = line_measure((-2, 2, -0.16, 0.16))
    f = M.mollify_to_field(m, M.MollifierSpec("gaussian", 0.05), g)
    peak = 2 * math.pi / (0.05 * math.sqrt(2 * math.pi))
    np.testing.assert_allclose(f.values[100, :], peak, rtol=1e-9)


def test_field_values_never_below_background():
    m = line_measure((-1, 1, -1, 1))
    g = Grid(41, 41, -1, 1, -1, 1)
    f = M.mollify_to_field(m, M.MollifierSpec("gaussian", 0.05, background=1e-3), g)
    assert f.values.min() >= 1e-3


def test_grid_domain_mismatch_is_configuration_error():
    m = line_measure((-1, 1, -1, 1))
    with pytest.raises(ConfigurationError):
        M.mollify_to_field(m, M.MollifierSpec(), Grid(41, 41, -2, 2, -2, 2))


def test_mollified_mass_converges_as_sigma_shrinks():
    d = M.Rect(-2, 2, -2, 2)
    m = M.MeasureSpec((M.CurveMeasure("circle", {"center": (0.0, 0.0), "radius": 1.0}, 1.0),), d)
    exact = M.measure_of_set(m, d)
    errs = []
    for sigma, n in [(0.2, 201), (0.1, 401), (0.05, 801)]:
        g = Grid(n, n, -2, 2, -2, 2)
        f = M.mollify_to_field(m, M.MollifierSpec("gaussian", sigma), g)
        errs.append(abs(grid_integrate(f.values, rect_weights(g, d.as_tuple())) - exact))
    assert exact == pytest.approx(2 * math.pi, rel=1e-12)
    assert errs[-1] < 1e-3 * exact


def test_weak_convergence_of_mollifications_is_monotone():
    m = lebesgue_plus_line()
    psi = M.RadialBump((0.1, 0.0), 0.8)
    target = M.test_pairing(m, psi)
    devs = []
    for sigma in (0.2, 0.1, 0.05):
        g = Grid(401, 401, -2, 2, -2, 2)
        f = M.mollify_to_field(m, M.MollifierSpec("gaussian", sigma), g)
        devs.append(abs(weak_pairing(FlowState(f, 1.0), psi) - target))
    assert devs[0] > devs[1] > devs[2]


# ---------------------------------------------------------------------------
# measure_of_set

def test_measure_of_line_rectangle_is_six_pi():
    m = line_measure((-2, 2, -4, 4))
    assert M.measure_of_set(m, (-1, 1, 0, 3)) == pytest.approx(6 * math.pi, rel=1e-14)


def test_measure_of_lebesgue_square():
    d = M.Rect(-3, 3, -3, 3)
    m = M.MeasureSpec((M.lebesgue(d),), d)
    assert M.measure_of_set(m, (0, 2, 0, 2)) == pytest.approx(4.0, rel=1e-10)


def test_measure_of_lebesgue_plus_line_is_three():
    assert M.measure_of_set(lebesgue_plus_line(), (-1, 1, 0, 1)) == pytest.approx(3.0, rel=1e-10)


def test_atom_counted_by_membership():
    d = M.Rect(-1, 1, -1, 1)
    m = M.MeasureSpec((M.Atom((0.5, 0.5), 2.0),), d)
    assert M.measure_of_set(m, (0, 1, 0, 1)) == 2.0
    assert M.measure_of_set(m, (-1, 0, -1, 0)) == 0.0


def test_disjoint_rectangle_raises():
    with pytest.raises(DomainError):
        M.measure_of_set(lebesgue_plus_line(), (5, 6, 5, 6))


def _mixed_measure():
    d = M.Rect(-2, 2, -2, 2)
    return M.MeasureSpec((M.lebesgue(d, 0.5),
                          M.Density("gaussian", {"center": (0.3, -0.2), "width": 0.4}, 1.5),
                          M.vertical_line(0.1, 2.0),
                          M.CurveMeasure("circle", {"center": (0.0, 0.0), "radius": 1.0}, 1.0),
                          M.Atom((-0.5, 0.5), 3.0)), d)


coord = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(coord, coord, coord, coord, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_mass_monotone_under_inclusion(a, b, c, d, s, r):
    x0, x1 = sorted((a, b))
    y0, y1 = sorted((c, d))
    if x1 - x0 < 1e-3 or y1 - y0 < 1e-3:
        return
    m = _mixed_measure()
    inner = (x0 + s * (x1 - x0) / 2, x1 - r * (x1 - x0) / 2, y0, y1)
    if inner[1] - inner[0] < 1e-6:
        return
    assert M.measure_of_set(m, inner) <= M.measure_of_set(m, (x0, x1, y0, y1)) + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.9, 1.9), st.floats(-1.9, 1.9))
def test_mass_additive_over_split(xs, ys):
    m = _mixed_measure()
    whole = M.measure_of_set(m, (-2, 2, -2, 2))
    # split at a cut that avoids the atom and the line, which sit on closed edges
    if abs(xs - 0.1) < 1e-6 or abs(xs + 0.5) < 1e-6:
        return
    left = M.measure_of_set(m, (-2, xs, -2, 2))
    right = M.measure_of_set(m, (xs, 2, -2, 2))
    assert left + right == pytest.approx(whole, rel=1e-8)


# ---------------------------------------------------------------------------
# test_pairing

def test_pairing_with_disjoint_bump_is_zero():
    m = line_measure((-2, 2, -2, 2), weight=1.0)
    psi = M.RadialBump((1.0, 0.0), 0.5, normalized=True)
    assert M.test_pairing(m, psi) == 0.0


def test_pairing_with_lebesgue_is_bump_integral():
    d = M.Rect(-2, 2, -2, 2)
    m = M.MeasureSpec((M.lebesgue(d),), d)
    psi = M.RadialBump((0.3, -0.2), 0.7)
    direct, _ = integrate.dblquad(lambda y, x: float(psi(x, y)), -0.4, 1.0, -0.9, 0.5,
                                  epsabs=1e-12, epsrel=1e-10)
    assert M.test_pairing(m, psi) == pytest.approx(direct, rel=1e-7)
    assert psi.lebesgue_integral() == pytest.approx(direct, rel=1e-7)


def test_normalized_bump_has_unit_integral():
    psi = M.RadialBump((0.0, 0.0), 0.3, normalized=True)
    assert psi.lebesgue_integral() == pytest.approx(1.0, rel=1e-12)


def test_pairing_with_line_is_line_integral():
    r = 0.6
    m = line_measure((-2, 2, -2, 2))
    psi = M.RadialBump((0.0, 0.2), r)
    line_int, _ = integrate.quad(lambda y: float(psi(0.0, y)), 0.2 - r, 0.2 + r, epsabs=1e-14)
    assert M.test_pairing(m, psi) == pytest.approx(2 * math.pi * line_int, rel=1e-9)


def test_pairing_support_escape_raises():
    with pytest.raises(DomainError):
        M.test_pairing(lebesgue_plus_line(), M.RadialBump((1.8, 0.0), 0.5))


# ---------------------------------------------------------------------------
# serialization

def test_measure_json_round_trip():
    m = _mixed_measure()
    back = M.MeasureSpec.from_json(m.to_json())
    assert back.to_dict() == m.to_dict()
    assert not back.nonatomic


def test_nonpositive_weight_rejected():
    with pytest.raises(ConfigurationError):
        M.MeasureSpec((M.vertical_line(0.0, 0.0),), M.Rect(-1, 1, -1, 1))
