"""Green-potential identities and explicit-constant inequality checks.

Every ``check_*`` returns :class:`EstimateReport` objects whose ``passed``
flag is ``margin >= -tol`` with ``margin = rhs - lhs``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from .errors import DomainError
from .exactsol import hyperbolic_complement_area
from .grid import ScalarField, disc_weights, integrate
from .solver import FlowState, Trajectory, laplacian_log, _lap_log_values

# Suite constants: twice the largest value observed on the exact fixtures of
# ``calibrate_constants``. Frozen so that regressions show up as failures.
C0_CAL = 1.0
C1_CAL = 2.0
C_CONTRACTION_CAL = 0.061
C_GAMMA_CAL = 0.96

UNBOUNDED = 1e300
V_INF = 2 * math.pi / math.log(4.0 / 3.0)


@dataclass
class EstimateReport:
    name: str
    params: dict
    lhs: float
    rhs: float
    tol: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.lhs, self.rhs, self.tol] + [v for v in self.params.values()
                                                 if isinstance(v, (int, float))]
        if not all(np.isfinite(v) for v in vals):
            raise DomainError(f"{self.name}: non-finite value in report")

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(self.margin >= -self.tol)

    def with_tol(self, tol: float) -> "EstimateReport":
        return EstimateReport(self.name, dict(self.params), self.lhs, self.rhs, tol, dict(self.details))

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "tol": self.tol, "pass": self.passed, "details": self.details}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)


# ---------------------------------------------------------------------------
# Green potential

def green_G(r, rho):
    """``log rho - log r + (r^2 - rho^2) / (2 rho^2)`` for ``0 < r <= rho``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > rho * (1 + 1e-15)) or rho <= 0:
        raise DomainError("green_G needs 0 < r <= rho")
    out = math.log(rho) - np.log(r) + 0.5 * (r * r - rho * rho) / (rho * rho)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def green_ball_integral(rho: float, method: str = "2d") -> float:
    """``int_{B_rho} G(|x|, rho) dx`` by 2-D Cartesian or 1-D radial quadrature."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    if method == "radial":
        val, _ = sint.quad(lambda r: 2 * math.pi * r * green_G(r, rho) if r > 0 else 0.0,
                           0.0, rho, epsabs=0, epsrel=1e-13, limit=200)
        return val
    if method != "2d":
        raise DomainError(f"unknown method {method!r}")

    def f(y, x):
        r = math.hypot(x, y)
        return green_G(min(r, rho), rho) if r > 0 else 0.0

    # one quadrant; the log singularity sits at the corner where quad copes well.
    # epsrel=1e-12 sits at roundoff, so quadpack's roundoff warning is expected
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sint.IntegrationWarning)
        val, _ = sint.dblquad(f, 0.0, rho, 0.0, lambda x: math.sqrt(max(rho * rho - x * x, 0.0)),
                              epsabs=0, epsrel=1e-12)
    return 4 * val


def _green_cell_average(h1: float, h2: float, rho: float) -> float:
    """Mean of ``G(|x|, rho)`` over the cell ``[-h1/2, h1/2] x [-h2/2, h2/2]``."""
    def f(y, x):
        r = math.hypot(x, y)
        return green_G(min(r, rho), rho) if r > 0 else 0.0
    val, _ = sint.dblquad(f, 0.0, h1 / 2, 0.0, h2 / 2, epsabs=0, epsrel=1e-10)
    return 4 * val / (h1 * h2)


def mean_value_identity_check(f: ScalarField, z0, rho: float, C: float = 10.0) -> EstimateReport:
    """Compare the ball average of ``f`` with ``f(z0) + (1/2pi) int Delta f G``.

    ``Delta f`` is the 5-point Laplacian; a node at ``z0`` uses the cell
    average of the logarithmic kernel. Passes iff the gap is at most
    ``C h^2 max|f|``.
    """
    g = f.grid
    I, J, w = disc_weights(g, z0, rho)
    X = g.x[I] - z0[0]
    Y = g.y[J] - z0[1]
    if g.periodic_x:
        X = X - g.period_x * np.round(X / g.period_x)
    if g.periodic_y:
        Y = Y - g.period_y * np.round(Y / g.period_y)
    interior = g.interior_mask()[I, J]
    if not np.all(interior):
        raise DomainError("disc reaches the grid edge where the Laplacian is undefined")
    r = np.hypot(X, Y)
    Gv = np.zeros_like(r)
    at_center = r < 1e-12 * max(g.hx, g.hy)
    Gv[~at_center] = green_G(np.minimum(r[~at_center], rho), rho)
    if np.any(at_center):
        Gv[at_center] = _green_cell_average(g.hx, g.hy, rho)
    lap = _laplacian(f)
    order = np.lexsort((J, I))
    avg = float(np.sum((f.values[I, J] * w)[order])) / (math.pi * rho * rho)
    corr = float(np.sum((lap[I, J] * Gv * w)[order])) / (2 * math.pi)
    fz = float(f.sample(np.array([z0[0]]), np.array([z0[1]]))[0])
    rhs = fz + corr
    tol = C * g.h ** 2 * float(np.max(np.abs(f.values)))
    gap = abs(avg - rhs)
    return EstimateReport("mean_value_identity", {"rho": rho, "z0x": float(z0[0]), "z0y": float(z0[1]),
                                                  "h": g.h},
                          lhs=gap, rhs=0.0, tol=tol, details={"average": avg, "representation": rhs})


def _laplacian(f: ScalarField) -> np.ndarray:
    # the log-Laplacian helper takes log-values, so hand it f directly
    return _lap_log_values(f.grid, f.values)


# ---------------------------------------------------------------------------
# pointwise estimates

def _curvature(s: FlowState) -> np.ndarray:
    return -laplacian_log(s.u).values / (2 * s.u.values)


def chen_tolerance(s: FlowState) -> float:
    K = _curvature(s)[s.grid.interior_mask()]
    return 10 * s.grid.h ** 2 * float(np.max(np.abs(K)))


def check_chen(s: FlowState, tol: float | None = None) -> EstimateReport:
    """Minimum interior Gauss curvature against ``-1/(2t)``."""
    K = _curvature(s)[s.grid.interior_mask()]
    if tol is None:
        tol = chen_tolerance(s)
    kmin = float(np.min(K))
    # lhs is the bound, rhs the observed minimum: margin = min K + 1/(2t)
    return EstimateReport("chen", {"t": s.t}, lhs=-1 / (2 * s.t), rhs=kmin, tol=tol,
                          details={"max_K": float(np.max(K))})


def _value(s: FlowState, p) -> float:
    return float(s.u.sample(np.array([p[0]]), np.array([p[1]]))[0])


def _disc_sup(s: FlowState, center, radius: float) -> float:
    I, J, _ = disc_weights(s.grid, center, radius)
    X = s.grid.x[I] - center[0]
    Y = s.grid.y[J] - center[1]
    if s.grid.periodic_x:
        X = X - s.grid.period_x * np.round(X / s.grid.period_x)
    if s.grid.periodic_y:
        Y = Y - s.grid.period_y * np.round(Y / s.grid.period_y)
    inside = X * X + Y * Y <= radius * radius
    return float(np.max(s.u.values[I[inside], J[inside]]))


def _disc_volume(s: FlowState, center, radius: float) -> float:
    return integrate(s.u.values, disc_weights(s.grid, center, radius))


def check_upper_theorem(traj: Trajectory, center, r: float, C0: float = C0_CAL) -> list[EstimateReport]:
    """``Chat = sup_{B_r} u(t) r^2 / t`` for snapshots past ``Vol_0(B_2r)/(2 pi)``.

    The earliest snapshot stands in for the initial metric.
    """
    vol0 = _disc_volume(traj[0], center, 2 * r)
    t_min = vol0 / (2 * math.pi)
    reports = []
    for s in traj:
        if s.t < t_min:
            continue
        chat = _disc_sup(s, center, r) * r * r / s.t
        reports.append(EstimateReport("upper_theorem", {"r": r, "t": s.t, "C0": C0}, lhs=chat, rhs=C0,
                                      details={"t_threshold": t_min}))
    return reports


def _snapshots_between(traj: Trajectory, t1: float, t2: float):
    return [s for s in traj if t1 * (1 - 1e-12) <= s.t <= t2 * (1 + 1e-12)]


def _harnack_setup(traj, x0, y0, rho, t1, t2):
    if rho <= 0:
        raise DomainError("rho must be positive")
    if math.hypot(y0[0] - x0[0], y0[1] - x0[1]) >= rho:
        raise DomainError("y0 must lie in B_rho(x0)")
    if not 0 < t1 <= t2:
        raise DomainError("need 0 < t1 <= t2")
    s1 = traj.at(t1)
    s2 = traj.at(t2)
    M0 = max(_disc_sup(s, x0, 2 * rho) for s in _snapshots_between(traj, t1, t2))
    return s1, s2, M0


def harnack_rhs(M0, ux0_t2, t1, t2, rho) -> float:
    rhs = 4 * math.log(M0 / ux0_t2) + 4 * math.log(t2 / t1) + rho * rho * M0 / (8 * t1)
    if rho > 0:
        rhs += 2 * rho * rho * M0 / (t2 - t1)
    return rhs


def check_harnack(traj: Trajectory, x0, y0, rho: float, t1: float, t2: float,
                  tol: float = 1e-9) -> EstimateReport:
    """Harnack-type bound with ``M0`` measured over ``B_2rho(x0) x [t1, t2]``."""
    if not t1 < t2:
        raise DomainError("check_harnack needs t1 < t2")
    s1, s2, M0 = _harnack_setup(traj, x0, y0, rho, t1, t2)
    lhs = math.log(M0 / _value(s1, y0))
    rhs = harnack_rhs(M0, _value(s2, x0), t1, t2, rho)
    return EstimateReport("harnack", {"rho": rho, "t1": t1, "t2": t2, "M0": M0,
                                      "x0x": float(x0[0]), "x0y": float(x0[1]),
                                      "y0x": float(y0[0]), "y0y": float(y0[1])},
                          lhs=lhs, rhs=rhs, tol=tol)


def lower_epsilon(M0, ux0_t2, t1, t2, rho) -> float:
    """Explicit ``epsilon`` with ``u(y0, t) >= epsilon t`` for ``t <= t1``.

    The ``rho^2 / (t2 - t1)`` term is dropped when ``rho = 0``.
    """
    neg_log = (4 * math.log(M0 / ux0_t2) + 4 * math.log(t2) - 3 * math.log(t1) - math.log(M0)
               + rho * rho * M0 / (8 * t1))
    if rho > 0:
        if t2 <= t1:
            raise DomainError("t2 > t1 required when rho > 0")
        neg_log += 2 * rho * rho * M0 / (t2 - t1)
    return math.exp(-neg_log)


def check_lower_corollary(traj: Trajectory, x0, y0, rho: float, t1: float, t2: float,
                          tol_rel: float = 1e-9) -> EstimateReport:
    """``u(y0, t) >= epsilon t`` at every snapshot ``t <= t1`` (worst case reported)."""
    s1, s2, M0 = _harnack_setup(traj, x0, y0, rho, t1, t2)
    eps = lower_epsilon(M0, _value(s2, x0), t1, t2, rho)
    worst = None
    for s in traj:
        if s.t > t1 * (1 + 1e-12):
            continue
        uy = _value(s, y0)
        bound = eps * s.t
        ratio = uy / bound
        if worst is None or ratio < worst[0]:
            worst = (ratio, s.t, uy, bound)
    if worst is None:
        raise DomainError("no snapshot at or before t1")
    _, t, uy, bound = worst
    return EstimateReport("lower_corollary", {"rho": rho, "t1": t1, "t2": t2, "M0": M0, "epsilon": eps,
                                              "t": t},
                          lhs=bound, rhs=uy, tol=tol_rel * bound)


def check_ab_monotone(traj: Trajectory, p, tol_rel: float | None = None,
                      chen_tols=None) -> EstimateReport:
    """``u(p, t)/t`` nonincreasing across consecutive snapshots at node ``p``.

    ``u/t`` decreases exactly when ``K >= -1/(2t)``, since ``u_t = -2Ku``; a
    curvature slack ``tol_K`` therefore allows ``u/t`` to grow by at most
    ``2 (u/t) tol_K dt``.  Without ``tol_rel`` that slack is the Chen
    tolerance of the two snapshots (``chen_tols`` caches it per snapshot).
    """
    i, j = traj[0].u.node_index(*p)
    ratios = np.array([s.u.values[i, j] / s.t for s in traj])
    if len(ratios) < 2:
        raise DomainError("need at least two snapshots")
    jumps = np.diff(ratios)
    if tol_rel is None:
        if chen_tols is None:
            chen_tols = [chen_tolerance(s) for s in traj]
        kt = np.maximum(chen_tols[:-1], chen_tols[1:])
        dts = np.diff(traj.times)
        tols = 2 * ratios[:-1] * kt * dts
    else:
        tols = tol_rel * ratios[:-1]
    k = int(np.argmax(jumps - tols))
    return EstimateReport("ab_monotone", {"px": float(traj.grid.x[i]), "py": float(traj.grid.y[j])},
                          lhs=float(jumps[k]), rhs=0.0, tol=float(tols[k]),
                          details={"t_from": traj[k].t, "t_to": traj[k + 1].t})


# ---------------------------------------------------------------------------
# L1 estimates

def _positive_part_integral(a: FlowState, b: FlowState, center, radius) -> float:
    diff = np.maximum(b.u.values - a.u.values, 0.0)
    return integrate(diff, disc_weights(a.grid, center, radius))


def _shared_times(trajA, trajB):
    if trajA.grid != trajB.grid:
        raise DomainError("trajectories must share a grid")
    ta, tb = trajA.times, trajB.times
    if len(ta) != len(tb) or any(abs(x - y) > 1e-12 * max(1.0, x) for x, y in zip(ta, tb)):
        raise DomainError("trajectories must share snapshot times")
    return ta


def check_l1_comparison(trajA: Trajectory, trajB: Trajectory, r0: float, R: float, gamma: float,
                        center=(0.0, 0.0), scale: float = 1.0,
                        C_gamma: float = C_GAMMA_CAL) -> EstimateReport:
    """Local L1 comparison with the iterated-log time term.

    Radii are in the unit-disc chart ``x = center + scale * z``; the earliest
    snapshot stands in for the limit as the start time goes to zero.
    """
    if not (0.5 < r0 < r0 ** (1 / 3) < R < 1):
        raise DomainError("need 1/2 < r0 < r0^(1/3) < R < 1")
    if not 0 < gamma < 0.5:
        raise DomainError("gamma must lie in (0, 1/2)")
    _shared_times(trajA, trajB)
    p = 1.0 / (1.0 + gamma)
    init = _positive_part_integral(trajA[0], trajB[0], center, R * scale) ** p
    denom = (-math.log(r0)) * (math.log(-math.log(r0)) - math.log(-math.log(R))) ** gamma
    worst = 0.0
    rows = []
    for a, b in zip(trajA.states[1:], trajB.states[1:]):
        lhs = _positive_part_integral(a, b, center, r0 * scale) ** p
        term = (a.t / denom) ** p
        chat = (lhs - init) / term
        rows.append({"t": a.t, "lhs": lhs, "initial": init, "time_term": term, "C_hat": chat})
        worst = max(worst, chat)
    return EstimateReport("l1_comparison", {"r0": r0, "R": R, "gamma": gamma, "C_gamma": C_gamma},
                          lhs=worst, rhs=C_gamma, details={"rows": rows, "s": trajA[0].t})


def check_l1_contraction(trajA: Trajectory, trajB: Trajectory, eps: float,
                         center=(0.0, 0.0), scale: float = 1.0,
                         c: float = C_CONTRACTION_CAL) -> EstimateReport:
    """Local L1 growth bound given ``u_A >= eps t`` on ``B_2``.

    If the lower bound fails a precondition report (``passed`` False) is
    returned instead of raising.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    _shared_times(trajA, trajB)
    for s in trajA:
        I, J, _ = disc_weights(s.grid, center, 2 * scale)
        low = float(np.min(s.u.values[I, J]))
        if low < eps * s.t:
            return EstimateReport("l1_contraction.precondition", {"eps": eps, "t": s.t},
                                  lhs=eps * s.t, rhs=low)
    init = _positive_part_integral(trajA[0], trajB[0], center, 2 * scale) ** 0.5
    worst = 0.0
    rows = []
    for a, b in zip(trajA.states[1:], trajB.states[1:]):
        lhs = _positive_part_integral(a, b, center, scale) ** 0.5
        term = (a.t / eps) ** 0.5
        chat = (lhs - init) / term
        rows.append({"t": a.t, "lhs": lhs, "initial": init, "c_hat": chat})
        worst = max(worst, chat)
    return EstimateReport("l1_contraction", {"eps": eps, "c": c}, lhs=worst, rhs=c,
                          details={"rows": rows})


# ---------------------------------------------------------------------------
# volume estimates

def hyperbolic_disc_area(r: float, method: str = "quad") -> float:
    """Area of ``B_r`` in the Poincare metric of the unit disc."""
    if not 0 < r < 1:
        raise DomainError("need 0 < r < 1")
    if method == "closed":
        return 4 * math.pi * r * r / (1 - r * r)
    val, _ = sint.quad(lambda s: 2 * math.pi * s * 4 / (1 - s * s) ** 2, 0.0, r, epsrel=1e-13)
    return val


def check_volume_upper(traj: Trajectory, r: float, s: float, center=(0.0, 0.0),
                       scale: float = 1.0, tol: float = 0.0) -> EstimateReport:
    """``Vol_t(B_r) <= 2t Vol_H(B_r) + Vol_0(B_s)``; worst snapshot reported."""
    if not 0 < r < s < 1:
        raise DomainError("need 0 < r < s < 1")
    vh = hyperbolic_disc_area(r)
    v0 = _disc_volume(traj[0], center, s * scale)
    worst = None
    rows = []
    for st in traj.states[1:]:
        lhs = _disc_volume(st, center, r * scale)
        rhs = 2 * st.t * vh + v0
        rows.append({"t": st.t, "lhs": lhs, "rhs": rhs})
        if worst is None or rhs - lhs < worst[1] - worst[0]:
            worst = (lhs, rhs, st.t)
    lhs, rhs, t = worst
    return EstimateReport("volume_upper", {"r": r, "s": s, "t": t}, lhs=lhs, rhs=rhs, tol=tol,
                          details={"rows": rows, "vol_H": vh, "relative_margin": (rhs - lhs) / rhs})


def v_infinity() -> float:
    """Hyperbolic area of ``{|p| > 2}`` for the complete metric outside ``B_{3/2}``."""
    return hyperbolic_complement_area(2.0, 1.5)


def check_volume_lower(traj: Trajectory, v0: float, center=(0.0, 0.0), scale: float = 1.0,
                       tol: float = 0.0) -> EstimateReport:
    """``Vol_t(B_2) >= v0 - t (4 pi + 2 V_inf)``; worst snapshot reported."""
    vinf = v_infinity()
    worst = None
    for st in traj:
        lhs_bound = v0 - st.t * (4 * math.pi + 2 * vinf)
        vol = _disc_volume(st, center, 2 * scale)
        if worst is None or vol - lhs_bound < worst[1] - worst[0]:
            worst = (lhs_bound, vol, st.t)
    bound, vol, t = worst
    return EstimateReport("volume_lower", {"v0": v0, "t": t, "V_inf": vinf}, lhs=bound, rhs=vol, tol=tol)


def check_dirac_upper(traj: Trajectory, L: float, R: float, center=(0.0, 0.0),
                      C1: float = C1_CAL) -> EstimateReport:
    """``Chat1 = max u(center, t)/L`` over snapshots with ``t <= R^2 L``."""
    sup0 = _disc_sup(traj[0], center, R)
    if sup0 > L * (1 + 1e-12):
        return EstimateReport("dirac_upper.precondition", {"L": L, "R": R}, lhs=sup0, rhs=L)
    i, j = traj[0].u.node_index(*center)
    vals = [s.u.values[i, j] / L for s in traj if s.t <= R * R * L]
    if not vals:
        raise DomainError("no snapshot with t <= R^2 L")
    return EstimateReport("dirac_upper", {"L": L, "R": R, "C1": C1}, lhs=float(max(vals)), rhs=C1)


# ---------------------------------------------------------------------------
# self-similarity

def check_selfsimilarity(traj: Trajectory, alpha: float, beta: float, lam: float,
                         t: float | None = None, margin: float = 0.5,
                         tol_ss: float = 0.02) -> EstimateReport:
    """Compare ``w(s + log lam, th - beta log lam, t)`` with ``lam^alpha w(s, th, t/lam^alpha)``.

    ``w`` is the log-polar conformal factor. Probes are interior nodes whose
    shifted image stays ``margin`` away from both radial ends.
    """
    g = traj.grid
    if g.topology != "annulus":
        raise DomainError("self-similarity checks run on the log-polar chart")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    t = traj.times[-1] if t is None else t
    big = traj.at(t)
    small = traj.at(t / lam ** alpha)
    shift = math.log(lam)
    S, T = g.mesh()
    probe = (S >= g.x0 + margin - min(shift, 0)) & (S <= g.x1 - margin - max(shift, 0))
    if not np.any(probe):
        raise DomainError("probe set is empty; chart too short for this lambda")
    sp_, tp = S[probe], T[probe]
    lhs = big.u.sample(sp_ + shift, tp - beta * shift)
    rhs = lam ** alpha * small.u.values[probe]
    dev = float(np.max(np.abs(lhs - rhs) / rhs))
    return EstimateReport("selfsimilarity", {"alpha": alpha, "beta": beta, "lambda": lam, "t": t},
                          lhs=dev, rhs=tol_ss, details={"probes": int(probe.sum())})


# ---------------------------------------------------------------------------
# calibration

def calibrate_constants() -> dict:
    """Largest empirical constants on exact fixtures (the frozen values are twice these)."""
    from .exactsol import LineSoliton, Constant
    from .grid import Grid
    from .solver import trajectory_from_solution

    g = Grid(161, 161, -4.0, 4.0, -4.0, 4.0)
    times = [0.25, 0.5, 1.0, 2.0, 4.0]
    line = trajectory_from_solution(LineSoliton(), g, times)
    const = trajectory_from_solution(Constant(1.0), g, [0.25, 0.5, 1.0, 2.0, 4.0])
    c0 = []
    for traj in (line, const):
        for r in (0.25, 0.5, 1.0):
            c0 += [rep.lhs for rep in check_upper_theorem(traj, (0.0, 0.0), r, C0=UNBOUNDED)]
    c1 = [check_dirac_upper(const, 1.0, 1.0, C1=UNBOUNDED).lhs]
    # away from the axis the soliton is bounded by its initial sup
    line_late = trajectory_from_solution(LineSoliton(), g, [0.1, 0.2, 0.4, 0.8])
    L = _disc_sup(line_late[0], (2.0, 0.0), 1.0)
    c1.append(check_dirac_upper(line_late, L, 1.0, (2.0, 0.0), C1=UNBOUNDED).lhs)
    # heavier solitons parked near the rim of the balls push mass inwards
    early = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
    base = trajectory_from_solution(LineSoliton(), g, early)
    eps = min(float(np.min(st.u.values[disc_weights(g, (0.0, 0.0), 2.0)[:2]])) / st.t for st in base)
    cc, cg = [], []
    for scale in (2.0, 4.0, 8.0):
        for x0 in (2.1, 2.5, 3.0):
            other = trajectory_from_solution(LineSoliton(scale, x0), g, early)
            cc.append(check_l1_contraction(base, other, 0.99 * eps, c=UNBOUNDED).lhs)
            cg.append(check_l1_comparison(base, other, 0.6, 0.9, 0.25, scale=2.0, C_gamma=UNBOUNDED).lhs)
    return {"C0": max(c0), "C1": max(c1), "c": max(cc), "C_gamma": max(cg)}
