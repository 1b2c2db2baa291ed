from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logflow_lab import exactsol as E
from logflow_lab import solver as S
from logflow_lab.errors import ConfigurationError, DomainError, PositivityError
from logflow_lab.grid import Grid, ScalarField


def _strip(nx: int, half: float = 6.0, ny: int = 16) -> Grid:
    return Grid.periodic(nx, ny, -half, half, 0.0, 1.0)


def _field(grid: Grid, fn) -> ScalarField:
    X, Y = grid.mesh()
    return ScalarField(grid, np.asarray(fn(X, Y), dtype=float))


def _soliton_run(nx: int, q: float, t0: float = 0.5, t1: float = 0.6) -> np.ndarray:
    grid = _strip(nx)
    sol = E.LineSoliton()
    u0 = _field(grid, lambda X, Y: sol.evaluate(X, Y, t0))
    traj = S.evolve(u0, S.TimeSchedule(t0, t1, q=q), S.DirichletExact(sol))
    return traj[-1].u.values[:, 0]


# ---------------------------------------------------------------------------
# discrete operators

def test_laplacian_log_of_constant_is_zero():
    g = Grid(20, 24, 0.0, 1.0, -1.0, 1.0)
    out = S.laplacian_log(ScalarField(g, np.full(g.shape, 3.7)))
    np.testing.assert_allclose(out.values, 0.0, atol=1e-12)


def test_laplacian_log_of_exponential_is_zero():
    g = Grid(30, 30, -1.0, 1.0, -1.0, 1.0)
    out = S.laplacian_log(_field(g, lambda X, Y: np.exp(X)))
    np.testing.assert_allclose(out.values, 0.0, atol=1e-9)


def test_laplacian_log_of_line_soliton_is_second_order():
    errs = []
    for nx in (61, 121, 241):
        g = _strip(nx, half=3.0)
        f = _field(g, lambda X, Y: E.line_soliton(X, 1.0))
        x = g.x[1:-1]
        exact = 2 * (x ** 2 - 1) / (1 + x ** 2) ** 2
        errs.append(np.max(np.abs(S.laplacian_log(f).values[1:-1, 0] - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_laplacian_log_copies_edge_values():
    g = Grid(20, 20, 0.0, 1.0, 0.0, 1.0)
    out = S.laplacian_log(_field(g, lambda X, Y: 1 + X ** 2 * Y)).values
    np.testing.assert_array_equal(out[0], out[1])
    np.testing.assert_array_equal(out[:, -1], out[:, -2])


def test_laplacian_log_rejects_nonpositive():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0)
    vals = np.ones(g.shape)
    vals[3, 4] = 0.0
    with pytest.raises(PositivityError):
        S.laplacian_log(ScalarField(g, vals))


def test_strip_factor_has_curvature_minus_one():
    a, h = 1.3, 1e-4
    x = np.linspace(-1.0, 1.0, 9)
    lf = lambda z: np.log(S.strip_factor(z, a))
    lap = (lf(x + h) - 2 * lf(x) + lf(x - h)) / h ** 2
    np.testing.assert_allclose(-lap / (2 * S.strip_factor(x, a)), -1.0, rtol=1e-5)


def test_hyperbolic_factor_solves_discrete_liouville():
    g = Grid(33, 33, -1.0, 1.0, -1.0, 1.0)
    h = S.hyperbolic_factor(g)
    lap = S.laplacian_log(h).values[1:-1, 1:-1]
    np.testing.assert_allclose(lap, 2 * h.values[1:-1, 1:-1], rtol=1e-7)
    # domain monotonicity: squeezed between the circumscribed and inscribed discs
    c = h.values[16, 16]
    assert E.poincare_disc_factor(np.zeros(2), math.sqrt(2)) <= c <= E.poincare_disc_factor(np.zeros(2), 1.0)
    assert h.values[1, 16] > h.values[16, 16]


def test_hyperbolic_factor_rejects_torus():
    with pytest.raises(ConfigurationError):
        S.hyperbolic_factor(Grid(16, 16, 0.0, 1.0, 0.0, 1.0, "torus"))


# ---------------------------------------------------------------------------
# flow states, steps

def test_flow_state_validation():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        S.FlowState(ScalarField(g, np.ones(g.shape)), 0.0)
    bad = np.ones(g.shape)
    bad[0, 0] = np.nan
    with pytest.raises(PositivityError):
        S.FlowState(ScalarField(g, bad), 1.0)


def test_torus_constant_is_steady():
    g = Grid(16, 20, 0.0, 1.0, 0.0, 1.0, "torus")
    s = S.FlowState(ScalarField(g, np.full(g.shape, 2.5)), 0.1)
    new, _ = S.step(s, 0.05, S.Periodic())
    assert new.t == pytest.approx(0.15)
    np.testing.assert_allclose(new.u.values, 2.5, rtol=1e-13)


def test_big_bang_is_an_exact_discrete_flow():
    g = Grid(25, 25, -1.0, 1.0, -1.0, 1.0)
    h = S.hyperbolic_factor(g).values
    t0, dt = 0.1, 0.03
    s = S.FlowState(ScalarField(g, 2 * t0 * h), t0)
    new, _ = S.step(s, dt, S.BigBangBarrier())
    # h solves the Liouville equation to 1e-8
    np.testing.assert_allclose(new.u.values, 2 * (t0 + dt) * h, rtol=1e-7)


def test_step_tracks_line_soliton():
    g = _strip(121)
    sol = E.LineSoliton()
    u0 = _field(g, lambda X, Y: sol.evaluate(X, Y, 0.5))
    new, its = S.step(S.FlowState(u0, 0.5), 1e-3, S.DirichletExact(sol))
    exact = sol.evaluate(g.x, 0.0, 0.501)
    assert np.max(np.abs(new.u.values[:, 0] / exact - 1)) < 1e-3
    assert 1 <= its <= 10


def test_spatial_order_is_two():
    # successive differences cancel the common time error
    a, b, c = (_soliton_run(n, 0.05) for n in (41, 81, 161))
    d1 = np.max(np.abs(a - b[::2]))
    d2 = np.max(np.abs(b[::2] - c[::4]))
    assert math.log2(d1 / d2) == pytest.approx(2.0, abs=0.3)


def test_time_order_is_one():
    a, b, c = (_soliton_run(81, q) for q in (0.04, 0.02, 0.01))
    assert math.log2(np.max(np.abs(a - b)) / np.max(np.abs(b - c))) == pytest.approx(1.0, abs=0.3)


# ---------------------------------------------------------------------------
# evolve

def test_evolve_constant_torus_is_constant():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0, "torus")
    traj = S.evolve(ScalarField(g, np.full(g.shape, 0.7)), S.TimeSchedule(0.01, 1.0, q=0.3),
                    S.Periodic(), snapshots=[0.01, 0.1, 1.0])
    assert traj.times == [0.01, 0.1, 1.0]
    for s in traj:
        np.testing.assert_allclose(s.u.values, 0.7, rtol=1e-12)


def test_evolve_line_soliton_error_small():
    g = _strip(241)
    sol = E.LineSoliton()
    u0 = _field(g, lambda X, Y: sol.evaluate(X, Y, 0.5))
    traj = S.evolve(u0, S.TimeSchedule(0.5, 1.0, q=0.01), S.DirichletExact(sol), snapshots=[0.75, 1.0])
    for s in traj:
        exact = sol.evaluate(*g.mesh(), s.t)
        assert np.max(np.abs(s.u.values / exact - 1)) < 5e-3


def test_evolve_is_deterministic():
    g = Grid(20, 20, -1.0, 1.0, -1.0, 1.0)
    u0 = _field(g, lambda X, Y: 1 + np.exp(-10 * (X ** 2 + Y ** 2)))
    sched = S.TimeSchedule(0.01, 0.05, q=0.2)
    a = S.evolve(u0, sched, S.BigBangBarrier())
    b = S.evolve(u0, sched, S.BigBangBarrier())
    np.testing.assert_array_equal(a[-1].u.values, b[-1].u.values)


def test_evolve_rejects_snapshots_outside_schedule():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0, "torus")
    with pytest.raises(ConfigurationError):
        S.evolve(ScalarField(g, np.ones(g.shape)), S.TimeSchedule(0.1, 1.0), S.Periodic(), [2.0])


def test_evolve_rejects_nonpositive_start():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0, "torus")
    with pytest.raises(PositivityError):
        S.evolve(ScalarField(g, np.zeros(g.shape)), S.TimeSchedule(0.1, 1.0), S.Periodic())


def test_barrier_init_raises_start_to_barrier():
    g = Grid(21, 21, -1.0, 1.0, -1.0, 1.0)
    u0 = ScalarField(g, np.full(g.shape, 1e-3))
    traj = S.evolve(u0, S.TimeSchedule(0.01, 0.02, q=0.2), S.BigBangBarrier(), snapshots=[0.01])
    np.testing.assert_allclose(traj[0].u.values, np.maximum(1e-3, 0.02 * S.hyperbolic_factor(g).values))


def _bump(grid, amp, cx, cy, w):
    X, Y = grid.mesh()
    return amp * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / w ** 2)


_bumps = st.tuples(st.floats(0.1, 5.0), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(0.1, 0.5))


@settings(max_examples=10, deadline=None)
@given(_bumps, _bumps, st.floats(0.05, 2.0))
def test_comparison_principle(b1, b2, base):
    g = Grid(20, 20, -1.0, 1.0, -1.0, 1.0, "torus")
    lo = base + _bump(g, *b1)
    hi = lo + _bump(g, *b2)
    sched = S.TimeSchedule(0.01, 0.05, q=0.25)
    ta = S.evolve(ScalarField(g, hi), sched, S.Periodic(), [0.02, 0.05])
    tb = S.evolve(ScalarField(g, lo), sched, S.Periodic(), [0.02, 0.05])
    tol = 10 * S.TOL_NEWTON
    for a, b in zip(ta, tb):
        assert np.all(a.u.values >= b.u.values - tol * np.max(b.u.values))


@settings(max_examples=10, deadline=None)
@given(_bumps, st.floats(1e-3, 1.0))
def test_big_bang_lower_barrier(b1, base):
    g = Grid(21, 21, -1.0, 1.0, -1.0, 1.0)
    u0 = ScalarField(g, base + _bump(g, *b1))
    traj = S.evolve(u0, S.TimeSchedule(0.005, 0.05, q=0.25), S.BigBangBarrier(), [0.01, 0.05])
    hf = S.hyperbolic_factor(g).values
    for s in traj:
        barrier = 2 * s.t * hf
        assert np.all(s.u.values >= barrier - 10 * S.TOL_NEWTON * barrier.max())
        assert s.u.values.min() > 0


# ---------------------------------------------------------------------------
# residual

def test_pde_residual_of_constant_is_zero():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0)
    traj = S.trajectory_from_solution(E.Constant(2.0), g, [0.1, 0.2])
    np.testing.assert_array_equal(S.pde_residual(traj, 0).values, 0.0)


def test_pde_residual_of_exact_soliton_is_second_order_in_h():
    res = []
    for nx in (31, 61, 121):
        traj = S.trajectory_from_solution(E.LineSoliton(), _strip(nx, half=3.0), [1.0, 1.0 + 1e-5])
        res.append(np.max(np.abs(S.pde_residual(traj, 0).values)))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.15)
    assert res[1] / res[2] == pytest.approx(4.0, rel=0.15)


def test_pde_residual_index_checked():
    traj = S.trajectory_from_solution(E.Constant(), Grid(16, 16, 0.0, 1.0, 0.0, 1.0), [0.1])
    with pytest.raises(DomainError):
        S.pde_residual(traj, 0)


# ---------------------------------------------------------------------------
# schedule and trajectory plumbing

@settings(max_examples=50, deadline=None)
@given(st.floats(1e-5, 1.0), st.floats(1.01, 1e3), st.floats(0.01, 0.5))
def test_schedule_covers_interval(t0, ratio, q):
    sched = S.TimeSchedule(t0, t0 * ratio, q=q)
    ts = sched.steps()
    assert ts[0] == t0 and ts[-1] == t0 * ratio
    steps = np.diff(ts)
    assert np.all(steps > 0)
    assert np.all(steps <= q * np.array(ts[:-1]) * (1 + 1e-12))


def test_schedule_respects_dt_max():
    ts = S.TimeSchedule(0.1, 1.0, q=0.5, dt_max=0.05).steps()
    assert np.max(np.diff(ts)) <= 0.05 + 1e-15


@pytest.mark.parametrize("kw", [dict(t_start=0.0, t_end=1.0), dict(t_start=1.0, t_end=0.5),
                                dict(t_start=0.1, t_end=1.0, q=0.0)])
def test_schedule_rejects_bad_config(kw):
    with pytest.raises(ConfigurationError):
        S.TimeSchedule(**kw)


def test_schedule_dict_round_trip():
    for sched in (S.TimeSchedule(0.1, 1.0), S.TimeSchedule(0.1, 1.0, q=0.2, dt_max=0.01)):
        assert S.TimeSchedule.from_dict(sched.to_dict()) == sched


def test_trajectory_order_and_lookup():
    g = Grid(16, 16, 0.0, 1.0, 0.0, 1.0)
    traj = S.trajectory_from_solution(E.Constant(), g, [0.1, 0.2])
    with pytest.raises(DomainError):
        traj.append(S.FlowState(ScalarField(g, np.ones(g.shape)), 0.15))
    assert traj.at(0.2).t == 0.2
    with pytest.raises(DomainError):
        traj.at(0.3)
    with pytest.raises(ValueError):
        traj[0].u.values[0, 0] = 5.0


def test_trajectory_dump_round_trip(tmp_path):
    g = _strip(40)
    traj = S.trajectory_from_solution(E.LineSoliton(), g, [0.5, 0.75, 1.0])
    traj.meta["newton_iterations"] = [3, 4]
    traj.dump(tmp_path / "run")
    back = S.Trajectory.load(tmp_path / "run")
    assert back.grid == g and back.times == traj.times
    assert back.meta["newton_iterations"] == [3, 4]
    for a, b in zip(traj, back):
        np.testing.assert_array_equal(a.u.values, b.u.values)


def test_trajectory_support_fills_outside_with_one():
    g = Grid(21, 21, -1.0, 1.0, -1.0, 1.0)
    traj = S.trajectory_from_solution(E.BigBangDisc(), g, [0.1], support=(0.0, 0.0, 1.0))
    X, Y = g.mesh()
    outside = np.hypot(X, Y) >= 1.0
    assert np.all(traj[0].u.values[outside] == 1.0)
    assert traj[0].u.values[10, 10] == pytest.approx(0.2 * 4)


@pytest.mark.parametrize("bc", [S.BigBangBarrier(), S.BigBangBarrier("none"), S.Periodic(),
                                S.DirichletExact(E.LineSoliton(2.0, 0.5)),
                                S.SpiralCone(0.3, 1.0, 2.0, 1, "cusp")])
def test_boundary_condition_dict_round_trip(bc):
    assert S.bc_from_dict(bc.to_dict()).to_dict() == bc.to_dict()


def test_boundary_condition_validation():
    with pytest.raises(ConfigurationError):
        S.Periodic().validate(Grid(16, 16, 0.0, 1.0, 0.0, 1.0))
    with pytest.raises(ConfigurationError):
        S.BigBangBarrier("min").validate(Grid(16, 16, 0.0, 1.0, 0.0, 1.0))
    with pytest.raises(ConfigurationError):
        S.SpiralCone(0.3, 1.0).validate(Grid(16, 16, 0.0, 1.0, 0.0, 1.0))
    with pytest.raises(ConfigurationError):
        S.bc_from_dict({"kind": "neumann"})
