"""Named experiments: configs, ladder execution, reports and run manifests.

A config names a start (measure, exact solution or boundary-condition
initial data), a refinement ladder, a schedule, boundary data and a list of
checks. ``run_experiment`` executes the ladder coarse to fine, evaluates
the per-rung checks and the ladder checks, and writes reports, tables,
figures and finally ``manifest.json``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w
from scipy import integrate as sint

from . import __version__
from . import estimates as est
from . import geometry as geo
from .errors import ConfigurationError, DomainError, LogflowError, SelectorError, SolverError
from .exactsol import ProfileF, cached_profile, solution_from_dict
from .grid import Grid, ScalarField, disc_weights, integrate
from .measure import Density, MeasureSpec, MollifierSpec, RadialBump, mollify_to_field
from .solver import (TimeSchedule, Trajectory, _atomic_write_text, bc_from_dict, evolve,
                     laplacian_log, trajectory_from_solution)

log = logging.getLogger(__name__)

DEFAULT_FORMATS = ["jsonl", "csv", "png"]
FORMATS = ("jsonl", "csv", "png", "bin")
SCHEDULE_LADDERS = ("t_start_ladder", "q_ladder", "dt_max_ladder")
SCHEDULE_KEYS = ("t_start", "t_end", "q", "dt_max", "max_retries", "tol_newton", "max_newton",
                 "chen_cap", "snapshots_rel") + SCHEDULE_LADDERS


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    name: str
    description: str = ""
    start: dict = field(default_factory=dict)
    sigma_ladder: list = field(default_factory=list)
    grid_ladder: list = field(default_factory=list)
    domain: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    bc: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    ladder_checks: list = field(default_factory=list)
    outputs: dict = field(default_factory=lambda: {"directory": "runs", "formats": list(DEFAULT_FORMATS)})
    allow_atoms: bool = False

    # serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown config keys {sorted(extra)}")
        if "name" not in d:
            raise ConfigurationError("config needs a name")
        return cls(**json.loads(json.dumps(d)))

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(tomli.loads(text))
        except tomli.TOMLDecodeError as exc:
            raise ConfigurationError(f"invalid TOML: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON: {exc}") from exc

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # rung accessors --------------------------------------------------------
    @property
    def n_rungs(self) -> int:
        return len(self.grid_ladder)

    def grid(self, i: int) -> Grid:
        nx, ny = (int(v) for v in self.grid_ladder[i])
        d = self.domain
        topo = d.get("topology", "plane")
        x0, x1 = float(d["x0"]), float(d["x1"])
        if topo == "annulus":
            return Grid.log_polar(nx, ny, x0, x1)
        if topo == "strip":
            return Grid.periodic(nx, ny, x0, x1, float(d.get("y0", 0.0)), float(d["period"]))
        if topo == "torus":
            px = (x1 - x0) * nx / (nx - 1)
            return Grid(nx, ny, x0, x0 + px * (nx - 1) / nx, float(d["y0"]),
                        float(d["y0"]) + float(d["period"]) * (ny - 1) / ny, "torus")
        return Grid(nx, ny, x0, x1, float(d["y0"]), float(d["y1"]), topo)

    def rung_schedule(self, i: int, t_start: float | None = None) -> TimeSchedule:
        s = self.schedule
        ts = float(s["t_start_ladder"][i]) if "t_start_ladder" in s else float(s["t_start"])
        if t_start is not None:
            ts = t_start
        snaps = self.rung_snapshots(i, ts)
        t_end = float(s["t_end"]) if "t_end" in s else max(snaps)
        q = float(s["q_ladder"][i]) if "q_ladder" in s else float(s.get("q", 0.05))
        dt_max = float(s["dt_max_ladder"][i]) if "dt_max_ladder" in s else float(s.get("dt_max", math.inf))
        kw = {k: s[k] for k in ("max_retries", "tol_newton", "max_newton") if k in s}
        return TimeSchedule(ts, t_end, q=q, dt_max=dt_max, **kw)

    def rung_snapshots(self, i: int, t_start: float) -> list[float]:
        if self.schedule.get("snapshots_rel", False):
            return [t_start * float(v) for v in self.snapshots]
        return [float(v) for v in self.snapshots]

    def measure(self) -> MeasureSpec | None:
        if "measure" not in self.start:
            return None
        return MeasureSpec.from_dict(self.start["measure"])

    def solution(self):
        sol = self.start.get("solution")
        return None if sol is None else solution_from_dict(sol)

    # validation ------------------------------------------------------------
    def validate(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise ConfigurationError("config needs a nonempty name")
        if not self.grid_ladder:
            raise ConfigurationError("grid ladder must be nonempty")
        sizes = []
        for rung in self.grid_ladder:
            if len(rung) != 2 or any(int(v) != v for v in rung):
                raise ConfigurationError(f"grid rung {rung!r} must be [nx, ny]")
            sizes.append((int(rung[0]), int(rung[1])))
        for a, b in zip(sizes, sizes[1:]):
            if not (b[0] > a[0] and b[1] >= a[1]):
                raise ConfigurationError("grid ladder must strictly refine")
        kinds = [k for k in ("measure", "solution", "bc_initial") if k in self.start]
        if len(kinds) != 1:
            raise ConfigurationError("start needs exactly one of measure, solution, bc_initial")
        if kinds[0] == "measure":
            m = self.measure()
            if not m.nonatomic and not self.allow_atoms:
                raise ConfigurationError("atoms are only accepted by the Dirac experiment")
            if len(self.sigma_ladder) != self.n_rungs:
                raise ConfigurationError("sigma ladder must match the grid ladder")
            if any(not s > 0 for s in self.sigma_ladder):
                raise ConfigurationError("mollifier widths must be positive")
            if any(b >= a for a, b in zip(self.sigma_ladder, self.sigma_ladder[1:])):
                raise ConfigurationError("sigma ladder must strictly refine")
        elif self.sigma_ladder:
            raise ConfigurationError("sigma ladder only applies to measure starts")
        if kinds[0] == "solution":
            self.solution()
        if self.domain.get("topology", "plane") not in ("plane", "strip", "annulus", "torus"):
            raise ConfigurationError(f"unknown topology {self.domain.get('topology')!r}")
        unknown = set(self.schedule) - set(SCHEDULE_KEYS)
        if unknown:
            raise ConfigurationError(f"unknown schedule keys {sorted(unknown)}")
        for key in SCHEDULE_LADDERS:
            if key in self.schedule and len(self.schedule[key]) != self.n_rungs:
                raise ConfigurationError(f"{key} must match the grid ladder")
        solve = self.start.get("solve", True)
        if solve and not self.bc:
            raise ConfigurationError("solver runs need a boundary condition")
        bc = bc_from_dict(self.bc) if self.bc else None
        if not self.snapshots:
            raise ConfigurationError("snapshot list must be nonempty")
        for i in range(self.n_rungs):
            g = self.grid(i)
            sched = self.rung_schedule(i)
            snaps = self.rung_snapshots(i, sched.t_start)
            if any(t < sched.t_start or t > sched.t_end for t in snaps):
                raise ConfigurationError("snapshot times must lie inside the schedule")
            if bc is not None:
                bc.validate(g)
        for c in self.checks:
            if c.get("name") not in CHECKS:
                raise ConfigurationError(f"unknown check {c.get('name')!r}")
        for c in self.ladder_checks:
            if c.get("name") not in LADDER_CHECKS:
                raise ConfigurationError(f"unknown ladder check {c.get('name')!r}")
        fmts = self.outputs.get("formats", DEFAULT_FORMATS)
        if any(f not in FORMATS for f in fmts):
            raise ConfigurationError(f"output formats must be among {FORMATS}")


def load_config(path) -> ExperimentConfig:
    """Read a TOML or JSON config, or a builtin name."""
    p = Path(path)
    if not p.exists():
        if str(path) in BUILTINS:
            return builtin_config(str(path))
        raise ConfigurationError(f"no config file or builtin named {str(path)!r}")
    text = p.read_text()
    if p.suffix == ".json":
        return ExperimentConfig.from_json(text)
    return ExperimentConfig.from_toml(text)


# ---------------------------------------------------------------------------
# rung context and checks

@dataclass
class RungContext:
    config: ExperimentConfig
    index: int
    grid: Grid
    sigma: float | None
    traj: Trajectory
    bc: object
    solution: object
    measure: MeasureSpec | None
    fixtures: dict

    @property
    def finest(self) -> bool:
        return self.index == self.config.n_rungs - 1

    def applies(self, rungs: str) -> bool:
        return rungs == "all" or (rungs == "finest" and self.finest)

    def fixture(self, spec: dict | None) -> Trajectory:
        """Exact-solution trajectory on its own grid, or the rung trajectory."""
        if spec is None:
            return self.traj
        key = json.dumps(spec, sort_keys=True)
        if key not in self.fixtures:
            grid = Grid.from_dict(spec["grid"])
            sol = solution_from_dict(spec["solution"])
            self.fixtures[key] = trajectory_from_solution(sol, grid, spec["times"], spec.get("support"))
        return self.fixtures[key]


def _window_report(name: str, params: dict, value: float, lo: float, hi: float | None,
                   **details) -> est.EstimateReport:
    """One-sided report for ``value >= lo`` or two-sided for ``lo <= value <= hi``."""
    if hi is None:
        return est.EstimateReport(name, params, lhs=lo, rhs=value, details={"value": value, **details})
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return est.EstimateReport(name, params, lhs=abs(value - mid), rhs=half,
                              details={"value": value, "lo": lo, "hi": hi, **details})


def _selected(traj: Trajectory, times) -> list:
    if times is None:
        return list(traj)
    return [traj.at(float(t)) for t in times]


def _check_exact_error(ctx: RungContext, tol: float = 1e-3, times=None, rungs: str = "finest"):
    if ctx.solution is None:
        raise ConfigurationError("exact_error needs an exact-solution start")
    states = _selected(ctx.traj, times) if times is not None else list(ctx.traj)[1:] or list(ctx.traj)
    X, Y = ctx.grid.mesh()
    worst, t_worst = 0.0, states[0].t
    for s in states:
        ue = ctx.solution.evaluate(X, Y, s.t)
        err = float(np.max(np.abs(s.u.values - ue) / ue))
        if err > worst:
            worst, t_worst = err, s.t
    reps = []
    if ctx.applies(rungs):
        reps.append(est.EstimateReport("exact_error", {"t": t_worst}, lhs=worst, rhs=tol))
    return reps, {"exact_error": worst}


def _exact_tail(sol, y: float, xr, t: float) -> float:
    f = lambda x: float(sol.evaluate(np.array([x]), np.array([y]), t)[0])
    left, _ = sint.quad(f, -np.inf, xr[0], epsabs=1e-13, epsrel=1e-12, limit=400)
    right, _ = sint.quad(f, xr[1], np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return left + right


def _check_slice_mass(ctx: RungContext, y: float = 0.0, xr=(-1.0, 1.0), target: float | None = None,
                      rel_tol: float | None = None, window=None, times=None, tail: str = "none"):
    reps, masses = [], {}
    for s in _selected(ctx.traj, times):
        m = geo.slice_mass(s, y, xr)
        extra = 0.0
        if tail == "exact":
            if ctx.solution is None:
                raise ConfigurationError("exact tails need an exact-solution start")
            extra = _exact_tail(ctx.solution, y, xr, s.t)
        total = m + extra
        masses[repr(s.t)] = total
        params = {"t": s.t, "y": y, "a": float(xr[0]), "b": float(xr[1])}
        if window is not None:
            reps.append(_window_report("slice_mass", params, total, float(window[0]), float(window[1]),
                                       tail=extra))
        else:
            reps.append(est.EstimateReport("slice_mass", params, lhs=abs(total - target) / target,
                                           rhs=rel_tol, details={"value": total, "tail": extra}))
    return reps, {"slice_mass": masses}


def _check_chen(ctx: RungContext):
    reps = [est.check_chen(s) for s in ctx.traj]
    return reps, {"chen_worst_margin": min(r.margin for r in reps)}


def _check_max_curvature(ctx: RungContext, rel_tol: float = 0.01, rungs: str = "finest"):
    reps, vals = [], {}
    for s in ctx.traj:
        K = geo.gauss_curvature(s).values[ctx.grid.interior_mask()]
        ratio = float(np.max(K)) * 2 * s.t
        vals[repr(s.t)] = ratio
        if ctx.applies(rungs):
            reps.append(est.EstimateReport("max_curvature", {"t": s.t}, lhs=abs(ratio - 1.0), rhs=rel_tol,
                                           details={"maxK_times_2t": ratio}))
    return reps, {"max_curvature": vals}


def _harnack_lattice(ctx, x0, rho, ratio, offsets, t2, fixture):
    traj = ctx.fixture(fixture)
    t2 = traj.times[-1] if t2 is None else float(t2)
    for r in rho:
        for k in ratio:
            for off in offsets:
                y0 = (x0[0] + off[0] * r, x0[1] + off[1] * r)
                yield traj, float(r), t2 / float(k), t2, y0


def _check_harnack(ctx: RungContext, x0=(0.0, 0.0), rho=(0.25, 0.5, 1.0), ratio=(2, 4),
                   offsets=((0.5, 0.0), (0.0, 0.5)), t2=None, fixture=None, tol: float = 1e-9):
    reps = [est.check_harnack(traj, x0, y0, r, t1, t2_, tol=tol)
            for traj, r, t1, t2_, y0 in _harnack_lattice(ctx, x0, rho, ratio, offsets, t2, fixture)]
    return reps, {}


def _check_lower_corollary(ctx: RungContext, x0=(0.0, 0.0), rho=(0.25, 0.5, 1.0), ratio=(2, 4),
                           offsets=((0.5, 0.0), (0.0, 0.5)), t2=None, fixture=None):
    reps = [est.check_lower_corollary(traj, x0, y0, r, t1, t2_)
            for traj, r, t1, t2_, y0 in _harnack_lattice(ctx, x0, rho, ratio, offsets, t2, fixture)]
    return reps, {}


def _check_ab_monotone(ctx: RungContext, n: int = 100, seed: int = 0, tol_rel: float | None = None):
    g = ctx.grid
    rng = np.random.default_rng(seed)
    ii = np.flatnonzero(g.interior_mask().ravel())
    pick = np.sort(rng.choice(ii, size=min(n, ii.size), replace=False))
    chen_tols = None if tol_rel is not None else [est.chen_tolerance(s) for s in ctx.traj]
    reps = []
    for k in pick:
        i, j = divmod(int(k), g.ny)
        reps.append(est.check_ab_monotone(ctx.traj, (g.x[i], g.y[j]), tol_rel=tol_rel, chen_tols=chen_tols))
    return reps, {}


def _check_upper_theorem(ctx: RungContext, center=(0.0, 0.0), radii=(0.25, 0.5, 1.0),
                         C0: float = est.C0_CAL, fixture=None):
    traj = ctx.fixture(fixture)
    reps = []
    for r in radii:
        reps += est.check_upper_theorem(traj, center, float(r), C0=C0)
    return reps, {}


def _check_distance(ctx: RungContext, p=(-1.0, 0.0), q=(1.0, 0.0), times=(0.02, 0.01, 0.005),
                    window=None, window_time=None, method: str = "dijkstra", lattice_tol: float = 0.006):
    euclid = math.hypot(q[0] - p[0], q[1] - p[1])
    values, reps = {}, []
    for t in times:
        s = ctx.traj.at(float(t))
        d = geo.riemannian_distance(s, p, q, method=method).value
        chord = geo.chord_length(s, p, q)
        values[repr(float(t))] = d
        reps.append(est.EstimateReport("distance.lower", {"t": float(t)}, lhs=euclid * (1 - lattice_tol),
                                       rhs=d, details={"chord": chord}))
    ordered = sorted(values.items(), key=lambda kv: float(kv[0]))
    # decreasing toward the flat distance as t decreases
    jumps = [b[1] - a[1] for a, b in zip(ordered, ordered[1:])]
    if jumps:
        reps.append(est.EstimateReport("distance.trend", {"n": len(ordered)}, lhs=-min(jumps), rhs=0.0,
                                       details={"values": dict(ordered)}))
    if window is not None:
        tw = float(window_time if window_time is not None else min(times))
        reps.append(_window_report("distance.window", {"t": tw}, values[repr(tw)], float(window[0]),
                                   float(window[1])))
    return reps, {"distance": values}


def _check_barrier_profile(ctx: RungContext, times=(0.005,), factor: float = 1.02, shift=None,
                           edge: float = 1.0):
    """``u <= factor * F((x - shift)/sqrt(t))`` on ``shift < x <= x1 - edge``.

    The comparison needs the initial density to be at most 1 right of the
    shift, so the default shift is the kernel support radius. ``edge``
    drops the boundary layer of the big-bang data at the box edge.
    """
    prof = cached_profile()
    if shift is None:
        kern = MollifierSpec(ctx.config.start.get("kernel", "gaussian"), float(ctx.sigma))
        shift = kern.support
    shift = float(shift)
    X, _ = ctx.grid.mesh()
    right = (X > shift) & (X <= ctx.grid.x1 - edge)
    reps, vals = [], {}
    for t in times:
        s = ctx.traj.at(float(t))
        ratio = s.u.values[right] / prof((X[right] - shift) / math.sqrt(s.t))
        k = int(np.argmax(ratio))
        vals[repr(s.t)] = float(ratio[k])
        reps.append(est.EstimateReport("barrier_profile", {"t": s.t, "shift": shift, "edge": edge},
                                       lhs=float(ratio[k]),
                                       rhs=factor, details={"x": float(X[right][k])}))
    return reps, {"barrier_ratio": vals}


def _check_volume_upper(ctx: RungContext, r: float = 0.5, s: float = 0.9, fixture=None,
                        equality: float = 0.01):
    traj = ctx.fixture(fixture)
    rep = est.check_volume_upper(traj, r, s)
    rel = rep.details["relative_margin"]
    eq = est.EstimateReport("volume_upper.equality", {"r": r, "s": s}, lhs=rel, rhs=equality)
    return [rep, eq], {"volume_upper_relative_margin": rel}


def _check_volume_lower(ctx: RungContext, v0: float, center=(0.0, 0.0)):
    rep = est.check_volume_lower(ctx.traj, v0, center)
    return [rep], {"V_inf": est.v_infinity()}


def _center_value(s, point) -> float:
    i, j = s.u.node_index(*point)
    return float(s.u.values[i, j])


def _check_dirac_value(ctx: RungContext, point=(0.0, 0.0), t: float = 0.01):
    return [], {"u_center": _center_value(ctx.traj.at(t), point)}


def _check_dirac_volume(ctx: RungContext, t: float = 0.01, radii=(0.05, 0.1), center=(0.0, 0.0),
                        C1: float = est.C1_CAL):
    s = ctx.traj.at(t)
    reps = []
    for r in radii:
        vol = geo.volume(s, geo.Disc(tuple(center), float(r)))
        reps.append(est.EstimateReport("dirac_volume", {"t": t, "r": float(r), "C1": C1}, lhs=vol,
                                       rhs=2 * C1 * math.pi * r * r))
    return reps, {}


def _check_bubble_mass(ctx: RungContext, radius: float = 0.1, times=(0.01,), center=(0.0, 0.0),
                       background: float = 1.0):
    """Volume of ``B_radius`` in excess of the background, per snapshot (metrics only)."""
    out = {}
    for t in times:
        vol = geo.volume(ctx.traj.at(float(t)), geo.Disc(tuple(center), float(radius)))
        out[f"bubble_mass@{float(t)!r}"] = vol - background * math.pi * radius ** 2
    return [], out


def _check_selfsimilarity(ctx: RungContext, alpha: float, beta: float, lam: float, margin: float = 0.5,
                          tol: float = 0.02, t=None):
    rep = est.check_selfsimilarity(ctx.traj, alpha, beta, lam, t=t, margin=margin, tol_ss=tol)
    return [rep], {"selfsimilarity": rep.lhs}


def _density_of(m: MeasureSpec):
    if m is None or not all(isinstance(c, Density) for c in m.components):
        raise ConfigurationError("L1 attainment needs a measure made of densities")
    return lambda X, Y: sum(c.evaluate(X, Y) for c in m.components)


def _check_l1_attainment(ctx: RungContext, center=(0.0, 0.0), radius: float = 1.0):
    u0 = _density_of(ctx.measure)
    disc = geo.Disc(tuple(center), radius)
    s = ctx.traj[0]
    l1 = geo.l1_distance(s, u0, disc)
    X, Y = ctx.grid.mesh()
    mass = integrate(u0(X, Y), disc_weights(ctx.grid, center, radius))
    return [], {"l1": l1, "l1_rel": l1 / mass, "l1_t": s.t}


def _check_weak_pairing(ctx: RungContext, bumps=()):
    family = [RadialBump.from_dict(b) for b in bumps]
    report = geo.weak_convergence_report(ctx.traj, ctx.measure, family)
    return [], {"weak_deviation": report.earliest()["deviation"], "weak_rows": report.to_dict()["rows"]}


def _check_green(ctx: RungContext, rhos=(0.5, 1.0, 2.0), rtol: float = 1e-8):
    reps = []
    for rho in rhos:
        exact = math.pi * rho * rho / 4
        vals = {}
        for method in ("2d", "radial"):
            v = est.green_ball_integral(rho, method)
            vals[method] = v
            reps.append(est.EstimateReport("green_integral", {"rho": rho, "route": method},
                                           lhs=abs(v - exact) / exact, rhs=rtol, details={"value": v}))
        reps.append(est.EstimateReport("green_integral.dual", {"rho": rho},
                                       lhs=abs(vals["2d"] - vals["radial"]) / exact, rhs=rtol))
    return reps, {}


def _smooth_fixture(X, Y):
    return np.exp(-(X * X + Y * Y)) * np.cos(X) + 0.5 * np.sin(Y)


def _check_mean_value(ctx: RungContext, sizes=(41, 81, 161), rho: float = 0.6, z0=(0.1, -0.05),
                      min_order: float = 1.7):
    gaps, hs = [], []
    for n in sizes:
        g = Grid(int(n), int(n), -1.0, 1.0, -1.0, 1.0)
        X, Y = g.mesh()
        rep = est.mean_value_identity_check(ScalarField(g, _smooth_fixture(X, Y)), z0, rho)
        gaps.append(rep.lhs)
        hs.append(g.h)
    orders = [math.log(a / b) / math.log(ha / hb) for a, b, ha, hb in zip(gaps, gaps[1:], hs, hs[1:])]
    rep = est.EstimateReport("mean_value_order", {"rho": rho}, lhs=min_order, rhs=min(orders),
                             details={"gaps": gaps, "h": hs, "orders": orders})
    return [rep], {"mean_value_orders": orders}


def _check_l1_pairs(ctx: RungContext, kind: str, base=None, others=(), **kw):
    A = ctx.fixture(base)
    reps = []
    for spec in others:
        B = ctx.fixture(spec)
        if kind == "contraction":
            reps.append(est.check_l1_contraction(A, B, **kw))
        else:
            reps.append(est.check_l1_comparison(A, B, **kw))
    return reps, {}


def _check_l1_contraction(ctx: RungContext, base=None, others=(), eps: float = 0.01,
                          center=(0.0, 0.0), scale: float = 1.0):
    return _check_l1_pairs(ctx, "contraction", base, others, eps=eps, center=tuple(center), scale=scale)


def _check_l1_comparison(ctx: RungContext, base=None, others=(), r0: float = 0.6, R: float = 0.9,
                         gamma: float = 0.25, center=(0.0, 0.0), scale: float = 2.0):
    return _check_l1_pairs(ctx, "comparison", base, others, r0=r0, R=R, gamma=gamma,
                           center=tuple(center), scale=scale)


def _check_profile(ctx: RungContext, s_max: float = 40.0, tol: float = 1e-8, s_probe: float = 0.05,
                   s_fit: float = 0.03):
    prof = cached_profile(s_max, tol)
    s = prof.s
    F = prof.F
    reps = [
        est.EstimateReport("profile.residual", {}, lhs=prof.residual_max, rhs=1e-8),
        # F - 1 underflows past s ~ 12, so strictness is read off F'
        est.EstimateReport("profile.decreasing", {}, lhs=float(np.max(prof.dF)), rhs=0.0,
                           details={"max_dF": float(np.max(prof.dF)), "max_diff_F": float(np.max(np.diff(F)))}),
        est.EstimateReport("profile.lower", {}, lhs=0.0,
                           rhs=float(np.min(F - np.maximum(1.0, 2.0 / s ** 2)))),
        est.EstimateReport("profile.tail", {"s_max": prof.s_max},
                           lhs=abs(float(prof(np.array([prof.s_max]))[0]) - 1.0), rhs=1e-6),
        est.EstimateReport("profile.origin", {"s": s_probe},
                           lhs=abs(float(prof(np.array([s_probe]))[0]) * s_probe ** 2 / 2 - 1.0),
                           rhs=0.05),
        est.EstimateReport("profile.asymptote", {"s_fit": s_fit},
                           lhs=abs(_inner_exponent(prof, s_fit) - math.sqrt(2.0)), rhs=0.01 * math.sqrt(2.0)),
    ]
    return reps, {"profile_points": int(s.size), "profile_s_min": float(s[0]),
                  "profile_inner_exponent": _inner_exponent(prof, s_fit)}


def _inner_exponent(prof, s_fit: float) -> float:
    """Slope of log(F s^2/2 - 1) against log s on ``s <= s_fit``.

    Linearising around ``2/s^2`` gives ``F s^2/2 - 1 ~ A s^sqrt(2)``.
    """
    keep = prof.s <= s_fit
    s = prof.s[keep]
    q = prof.F[keep] * s ** 2 / 2 - 1.0
    return float(np.polyfit(np.log(s), np.log(q), 1)[0])


CHECKS = {
    "exact_error": _check_exact_error,
    "slice_mass": _check_slice_mass,
    "chen": _check_chen,
    "max_curvature": _check_max_curvature,
    "harnack": _check_harnack,
    "lower_corollary": _check_lower_corollary,
    "ab_monotone": _check_ab_monotone,
    "upper_theorem": _check_upper_theorem,
    "distance": _check_distance,
    "barrier_profile": _check_barrier_profile,
    "volume_upper": _check_volume_upper,
    "volume_lower": _check_volume_lower,
    "dirac_value": _check_dirac_value,
    "dirac_volume": _check_dirac_volume,
    "selfsimilarity": _check_selfsimilarity,
    "bubble_mass": _check_bubble_mass,
    "l1_attainment": _check_l1_attainment,
    "weak_pairing": _check_weak_pairing,
    "green": _check_green,
    "mean_value": _check_mean_value,
    "l1_contraction": _check_l1_contraction,
    "l1_comparison": _check_l1_comparison,
    "profile": _check_profile,
}


# ---------------------------------------------------------------------------
# ladder checks

def _metric_series(rungs, metric):
    vals = [r.metrics.get(metric) for r in rungs]
    if any(v is None for v in vals):
        raise DomainError(f"metric {metric!r} missing on some rung")
    return [float(v) for v in vals]


def _ladder_ratio(rungs, metric: str, lo: float, hi: float | None = None):
    v = _metric_series(rungs, metric)
    return [_window_report("ladder.ratio", {"metric": metric, "rung": i + 1}, a / b, lo, hi)
            for i, (a, b) in enumerate(zip(v, v[1:]))]


def _ladder_decreasing(rungs, metric: str, final_max: float | None = None):
    v = _metric_series(rungs, metric)
    reps = []
    if len(v) > 1:
        worst = max(b - a for a, b in zip(v, v[1:]))
        reps.append(est.EstimateReport("ladder.decreasing", {"metric": metric}, lhs=worst, rhs=0.0,
                                       details={"values": v, "strict": geo.ladder_decreasing(v)}))
    if final_max is not None:
        reps.append(est.EstimateReport("ladder.final", {"metric": metric}, lhs=v[-1], rhs=final_max))
    return reps


def _ladder_spread(rungs, metric: str, max_factor: float = 2.0):
    v = _metric_series(rungs, metric)
    return [est.EstimateReport("ladder.spread", {"metric": metric}, lhs=max(v) / min(v), rhs=max_factor,
                               details={"values": v})]


LADDER_CHECKS = {
    "convergence_ratio": _ladder_ratio,
    "ladder_decreasing": _ladder_decreasing,
    "ladder_spread": _ladder_spread,
}


# ---------------------------------------------------------------------------
# execution

@dataclass
class RungResult:
    index: int
    sigma: float | None
    grid: dict
    schedule: dict
    status: str = "ok"
    error: str = ""
    reports: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    traj: Trajectory | None = None

    def summary(self) -> dict:
        return {"index": self.index, "sigma": self.sigma, "grid": self.grid, "schedule": self.schedule,
                "status": self.status, "error": self.error,
                "passed": sum(r["pass"] for r in self.reports),
                "failed": sum(not r["pass"] for r in self.reports)}


@dataclass
class RunManifest:
    name: str
    config_hash: str
    code_version: str
    timings: dict
    artifacts: list
    summary: dict
    rungs: list
    status: str
    created: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> "RunManifest":
        p = Path(path)
        if p.is_dir():
            p = p / "manifest.json"
        if not p.exists():
            raise SelectorError(f"no manifest at {p}")
        d = json.loads(p.read_text())
        m = cls(**d)
        m.root = p.parent
        return m

    def artifact(self, name: str) -> Path:
        for a in self.artifacts:
            if a["path"] == name:
                return Path(self.root) / name
        raise SelectorError(f"artifact {name!r} not in manifest")


def _initial_field(cfg: ExperimentConfig, i: int, grid: Grid, bc):
    if "measure" in cfg.start:
        k = MollifierSpec(cfg.start.get("kernel", "gaussian"), float(cfg.sigma_ladder[i]),
                          float(cfg.start.get("background", 0.0)))
        return mollify_to_field(cfg.measure(), k, grid)
    if "solution" in cfg.start:
        return None
    return bc.initial(grid)


def _chen_start(u0: ScalarField, t_start: float) -> float:
    """Largest admissible start time ``min(t_start, 1/(2|min K0|))``."""
    K = -laplacian_log(u0).values / (2 * u0.values)
    kmin = float(np.min(K[u0.grid.interior_mask()]))
    return t_start if kmin >= 0 else min(t_start, 1.0 / (2 * abs(kmin)))


def run_rung(cfg: ExperimentConfig, i: int) -> RungResult:
    grid = cfg.grid(i)
    sigma = float(cfg.sigma_ladder[i]) if cfg.sigma_ladder else None
    bc = bc_from_dict(cfg.bc) if cfg.bc else None
    sol = cfg.solution()
    sched = cfg.rung_schedule(i)
    res = RungResult(i, sigma, grid.to_dict(), sched.to_dict())
    t0 = time.perf_counter()
    u0 = _initial_field(cfg, i, grid, bc)
    if u0 is not None and cfg.schedule.get("chen_cap", False):
        sched = cfg.rung_schedule(i, _chen_start(u0, sched.t_start))
        res.schedule = sched.to_dict()
    snaps = cfg.rung_snapshots(i, sched.t_start)
    res.timings["initial"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if sol is not None and not cfg.start.get("solve", True):
        traj = trajectory_from_solution(sol, grid, snaps)
    else:
        if u0 is None:
            X, Y = grid.mesh()
            u0 = ScalarField(grid, sol.evaluate(X, Y, sched.t_start))
        try:
            traj = evolve(u0, sched, bc, snaps)
        except SolverError as exc:
            log.error("rung %d solver failure: %s", i, exc)
            res.status, res.error = "solver_failed", str(exc)
            res.traj = exc.trajectory
            res.timings["solve"] = time.perf_counter() - t0
            return res
    res.timings["solve"] = time.perf_counter() - t0
    res.traj = traj
    res.metrics["newton_iterations"] = int(sum(traj.meta.get("newton_iterations", [])))
    res.metrics["steps"] = len(traj.meta.get("step_times", []))
    ctx = RungContext(cfg, i, grid, sigma, traj, bc, sol, cfg.measure(), {})
    t0 = time.perf_counter()
    for c in cfg.checks:
        name, params = c["name"], dict(c.get("params", {}))
        try:
            reps, metrics = CHECKS[name](ctx, **params)
        except (LogflowError, ArithmeticError, ValueError) as exc:
            # numerical trouble in one check must not sink the remaining diagnostics
            log.warning("check %s failed to evaluate on rung %d: %s", name, i, exc)
            reps, metrics = [], {}
            res.reports.append({"check": name, "rung": i, "name": f"{name}.error", "pass": False,
                                "error": f"{type(exc).__name__}: {exc}"})
        fixture = params.get("fixture") or params.get("base")
        source = fixture["solution"]["kind"] if fixture else "flow"
        for r in reps:
            res.reports.append({"check": name, "rung": i, "source": source, **r.to_dict()})
        res.metrics.update(metrics)
    res.timings["checks"] = time.perf_counter() - t0
    return res


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, default=float)


def _write_slices(traj: Trajectory, path: Path) -> None:
    g = traj.grid
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x"] + [f"t={s.t!r}" for s in traj])
    for i in range(g.nx):
        w.writerow([repr(float(g.x[i]))] + [repr(float(s.u.values[i, 0])) for s in traj])
    path.write_text(buf.getvalue())


def _summary_rows(reports: list) -> list[dict]:
    rows = {}
    for r in reports:
        key = (r["check"], r["name"], r["rung"])
        row = rows.setdefault(key, {"check": r["check"], "report": r["name"], "rung": r["rung"],
                                    "n": 0, "passed": 0, "failed": 0, "worst_margin": math.inf})
        row["n"] += 1
        row["passed" if r["pass"] else "failed"] += 1
        if "margin" in r:
            row["worst_margin"] = min(row["worst_margin"], r["margin"] + r.get("tol", 0.0))
    return [rows[k] for k in sorted(rows, key=lambda k: (str(k[2]), k[0], k[1]))]


def summary_table(reports: list) -> str:
    """Tab-delimited table: one row per (check, report, rung)."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(["check", "report", "rung", "n", "passed", "failed", "worst_margin"])
    for r in _summary_rows(reports):
        w.writerow([r["check"], r["report"], r["rung"], r["n"], r["passed"], r["failed"],
                    f"{r['worst_margin']:.6g}"])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, out_root=None) -> RunManifest:
    """Execute the ladder, evaluate the checks and write every artifact."""
    cfg.validate()
    root = Path(out_root if out_root is not None else cfg.outputs.get("directory", "runs")) / cfg.name
    try:
        root.mkdir(parents=True, exist_ok=True)
        probe = root / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigurationError(f"output directory {root} is not writable: {exc}") from exc
    fmts = cfg.outputs.get("formats", DEFAULT_FORMATS)
    timings = {}
    rungs = []
    for i in range(cfg.n_rungs):
        log.info("%s: rung %d/%d", cfg.name, i + 1, cfg.n_rungs)
        res = run_rung(cfg, i)
        rungs.append(res)
        for k, v in res.timings.items():
            timings[f"rung{i}.{k}"] = v
    ok = [r for r in rungs if r.status == "ok"]
    ladder_reports = []
    if len(ok) == len(rungs):
        for c in cfg.ladder_checks:
            try:
                reps = LADDER_CHECKS[c["name"]](rungs, **dict(c.get("params", {})))
            except LogflowError as exc:
                ladder_reports.append({"check": c["name"], "rung": "ladder", "name": f"{c['name']}.error",
                                       "pass": False, "error": str(exc)})
                continue
            ladder_reports += [{"check": c["name"], "rung": "ladder", **r.to_dict()} for r in reps]
    reports = [r for res in rungs for r in res.reports] + ladder_reports

    artifacts = []

    def add(path: Path):
        artifacts.append({"path": str(path.relative_to(root)), "sha256": _sha256(path),
                          "bytes": path.stat().st_size})

    t0 = time.perf_counter()
    if "jsonl" in fmts:
        p = root / "reports.jsonl"
        p.write_text("".join(_dumps({"experiment": cfg.name, **r}) + "\n" for r in reports))
        add(p)
        p = root / "metrics.json"
        p.write_text(json.dumps({str(r.index): r.metrics for r in rungs}, sort_keys=True, indent=1,
                                default=float))
        add(p)
    if "csv" in fmts:
        p = root / "summary.tsv"
        p.write_text(summary_table(reports))
        add(p)
        for res in rungs:
            if res.traj is not None and len(res.traj):
                p = root / f"rung{res.index}_slices.csv"
                _write_slices(res.traj, p)
                add(p)
        if any(c["name"] == "profile" for c in cfg.checks):
            p = root / "profile.csv"
            cached_profile().to_csv(p)
            add(p)
    if "bin" in fmts:
        for res in rungs:
            if res.traj is not None and len(res.traj):
                d = res.traj.dump(root / f"rung{res.index}")
                for f in sorted(d.iterdir()):
                    add(f)
    if "png" in fmts:
        from . import plotting
        for p in plotting.experiment_figures(cfg, rungs, root / "figures"):
            add(p)
    p = root / "config.toml"
    p.write_text(cfg.to_toml())
    add(p)
    timings["outputs"] = time.perf_counter() - t0

    failed = sum(not r["pass"] for r in reports)
    status = "ok" if len(ok) == len(rungs) else "solver_failed"
    manifest = RunManifest(cfg.name, cfg.config_hash(), __version__, timings, artifacts,
                           {"passed": len(reports) - failed, "failed": failed, "reports": len(reports)},
                           [r.summary() for r in rungs], status,
                           time.strftime("%Y-%m-%dT%H:%M:%S%z"))
    _atomic_write_text(root / "manifest.json", json.dumps(manifest.to_dict(), indent=1, sort_keys=True,
                                                          default=float))
    manifest.root = root
    manifest.reports = reports
    return manifest


# ---------------------------------------------------------------------------
# plot-data export

EXPORT_SELECTORS = ("slices", "profile", "reports", "convergence")


def export_plot_data(manifest: RunManifest | str | Path, what: str, out_dir=None) -> list[Path]:
    """Write plot-ready CSV for ``what`` (comma-separated selectors; empty for none)."""
    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.load(manifest)
    out = Path(out_dir) if out_dir is not None else Path(manifest.root) / "export"
    selectors = [s.strip() for s in (what or "").split(",") if s.strip() and s.strip() != "none"]
    for s in selectors:
        if s not in EXPORT_SELECTORS:
            raise SelectorError(f"unknown selector {s!r}; choose from {EXPORT_SELECTORS}")
    files = []
    if selectors:
        out.mkdir(parents=True, exist_ok=True)
    for s in selectors:
        if s == "slices":
            finest = len(manifest.rungs) - 1
            src = manifest.artifact(f"rung{finest}_slices.csv")
            with open(src) as fh:
                rows = list(csv.reader(fh))
            header = rows[0]
            for k, col in enumerate(header[1:], start=1):
                t = col.split("=", 1)[1]
                p = out / f"slice_t{t}.csv"
                with open(p, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(["x", "u"])
                    for row in rows[1:]:
                        w.writerow([row[0], row[k]])
                files.append(p)
        elif s == "profile":
            prof = ProfileF.from_csv(manifest.artifact("profile.csv"))
            p = out / "profile_F.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["s", "F"])
                for a, b in zip(prof.s, prof.F):
                    w.writerow([repr(float(a)), repr(float(b))])
            files.append(p)
        elif s == "reports":
            src = manifest.artifact("reports.jsonl")
            p = out / "reports.csv"
            with open(src) as fh, open(p, "w", newline="") as oh:
                w = csv.writer(oh, lineterminator="\n")
                w.writerow(["rung", "check", "report", "t", "lhs", "rhs", "margin", "pass"])
                for line in fh:
                    r = json.loads(line)
                    w.writerow([r["rung"], r["check"], r["name"], r.get("params", {}).get("t", ""),
                                r.get("lhs", ""), r.get("rhs", ""), r.get("margin", ""), r["pass"]])
            files.append(p)
        elif s == "convergence":
            metrics = json.loads(manifest.artifact("metrics.json").read_text())
            scalars = sorted({k for m in metrics.values() for k, v in m.items()
                              if isinstance(v, (int, float)) and not isinstance(v, bool)})
            p = out / "convergence.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["rung", "sigma", "nx", "ny", "h"] + scalars)
                for rs in manifest.rungs:
                    g = Grid.from_dict(rs["grid"])
                    m = metrics[str(rs["index"])]
                    w.writerow([rs["index"], rs["sigma"] if rs["sigma"] is not None else "", g.nx, g.ny,
                                repr(g.h)] + [m.get(k, "") for k in scalars])
            files.append(p)
    return files


# ---------------------------------------------------------------------------
# builtin experiments

def _line_fixture(times, scale: float = 1.0, x0: float = 0.0, n: int = 161, half: float = 4.0):
    return {"solution": {"kind": "line_soliton", "scale": scale, "x0": x0},
            "grid": {"nx": n, "ny": n, "x0": -half, "x1": half, "y0": -half, "y1": half,
                     "topology": "plane"},
            "times": list(times)}


def _common_checks(n_ab: int = 100) -> list[dict]:
    return [{"name": "chen", "params": {}},
            {"name": "ab_monotone", "params": {"n": n_ab, "seed": 0}}]


def _soliton_verify() -> ExperimentConfig:
    line = {"kind": "line_soliton", "scale": 1.0, "x0": 0.0}
    return ExperimentConfig(
        name="soliton-verify",
        description="Line soliton 2t/(t^2+x^2): exact regression, slice mass, curvature window",
        start={"solution": line},
        grid_ladder=[[256, 16], [512, 16]],
        domain={"topology": "strip", "x0": -6.0, "x1": 6.0, "y0": 0.0, "period": 0.375},
        schedule={"t_start": 0.5, "t_end": 1.0, "q": 1.0, "dt_max_ladder": [2.5e-3, 6.25e-4]},
        bc={"kind": "dirichlet_exact", "solution": line},
        snapshots=[0.5, 0.625, 0.75, 0.875, 1.0],
        checks=[{"name": "exact_error", "params": {"tol": 1e-3, "rungs": "finest"}},
                {"name": "slice_mass", "params": {"y": 0.0, "xr": [-6.0, 6.0], "target": 2 * math.pi,
                                                  "rel_tol": 0.005, "tail": "exact"}},
                {"name": "max_curvature", "params": {"rel_tol": 0.01, "rungs": "finest"}}]
        + _common_checks(),
        ladder_checks=[{"name": "convergence_ratio", "params": {"metric": "exact_error", "lo": 3.0,
                                                                "hi": 5.0}}],
    )


def _halfplane_profile() -> ExperimentConfig:
    sol = {"kind": "halfplane_profile", "axis": "x", "offset": 0.0, "s_max": 40.0, "tol": 1e-8}
    return ExperimentConfig(
        name="halfplane-profile",
        description="Half-plane profile F(s): shooting checks and a PDE regression of F(x/sqrt(t))",
        start={"solution": sol},
        grid_ladder=[[81, 16], [161, 16]],
        domain={"topology": "strip", "x0": 0.25, "x1": 4.25, "y0": 0.0, "period": 0.4},
        schedule={"t_start": 0.5, "t_end": 1.0, "q": 1.0, "dt_max_ladder": [1e-2, 2.5e-3]},
        bc={"kind": "dirichlet_exact", "solution": sol},
        snapshots=[0.5, 0.75, 1.0],
        checks=[{"name": "profile", "params": {"s_max": 40.0, "tol": 1e-8, "s_probe": 0.05}},
                {"name": "exact_error", "params": {"tol": 1e-2, "rungs": "all"}}]
        + _common_checks(),
        ladder_checks=[{"name": "convergence_ratio", "params": {"metric": "exact_error", "lo": 3.0,
                                                                "hi": 5.0}}],
    )


def _translating() -> ExperimentConfig:
    bc = {"kind": "spiral_cone", "amplitude": 0.5, "beta": 0.0, "alpha": 1.0, "mode": 1, "inner": "cusp"}
    return ExperimentConfig(
        name="translating",
        description="Translating soliton from e^x f(y) on the cylinder with a complete cusp end",
        start={"bc_initial": True},
        grid_ladder=[[96, 32], [191, 64]],
        domain={"topology": "annulus", "x0": -16.0, "x1": 3.0},
        schedule={"t_start": 1e-4, "t_end": 1.0, "q_ladder": [0.1, 0.05]},
        bc=bc,
        snapshots=[0.5, 1.0],
        checks=[{"name": "selfsimilarity", "params": {"alpha": 1.0, "beta": 0.0, "lam": 2.0,
                                                      "margin": 1.0, "tol": 0.02}}]
        + _common_checks(),
    )


def _rotating() -> ExperimentConfig:
    bc = {"kind": "spiral_cone", "amplitude": 0.5, "beta": 1.0, "alpha": 2.0, "mode": 1, "inner": "dtn"}
    return ExperimentConfig(
        name="rotating",
        description="Rotating soliton (alpha=2, beta=1) from the spiral cone f(theta + log r)",
        start={"bc_initial": True},
        grid_ladder=[[71, 64], [141, 128]],
        domain={"topology": "annulus", "x0": -4.0, "x1": 3.0},
        schedule={"t_start": 1e-4, "t_end": 1.0, "q_ladder": [0.1, 0.025]},
        bc=bc,
        snapshots=[0.5, 1.0],
        checks=[{"name": "selfsimilarity", "params": {"alpha": 2.0, "beta": 1.0, "lam": math.sqrt(2.0),
                                                      "margin": 1.0, "tol": 0.02}}]
        + _common_checks(),
        ladder_checks=[{"name": "convergence_ratio", "params": {"metric": "selfsimilarity", "lo": 2.0}}],
    )


def _counterexample() -> ExperimentConfig:
    sigma = 0.05
    measure = {"domain": [-4.0, 4.0, -0.08, 0.08],
               "components": [{"type": "density", "kind": "constant", "params": {"value": 1.0},
                               "weight": 1.0},
                              {"type": "curve", "kind": "line",
                               "params": {"point": [0.0, 0.0], "direction": [0.0, 1.0]}, "weight": 1.0}]}
    return ExperimentConfig(
        name="counterexample",
        description="Lebesgue plus a line: slice mass 3, distance toward 2, half-plane barrier",
        # compact kernel: the barrier needs u0 <= 1 for x > sigma
        start={"measure": measure, "kernel": "bump"},
        sigma_ladder=[sigma],
        grid_ladder=[[801, 16]],
        domain={"topology": "strip", "x0": -4.0, "x1": 4.0, "y0": -0.08, "period": 0.16},
        schedule={"t_start": 1e-4, "t_end": 0.02, "q": 0.05},
        bc={"kind": "big_bang_barrier", "init": "max"},
        snapshots=[0.005, 0.01, 0.02],
        checks=[{"name": "slice_mass", "params": {"y": 0.0, "xr": [-1.0, 1.0], "window": [2.85, 3.15],
                                                  "times": [0.005]}},
                {"name": "distance", "params": {"p": [-1.0, 0.0], "q": [1.0, 0.0],
                                                "times": [0.02, 0.01, 0.005], "window": [1.96, 2.2],
                                                "window_time": 0.005}},
                {"name": "barrier_profile", "params": {"times": [0.005], "factor": 1.02}},
                {"name": "volume_lower", "params": {"v0": 4 * math.pi + 4.0}}]
        + _common_checks(),
    )


def _dirac_ladder() -> ExperimentConfig:
    measure = {"domain": [-1.0, 1.0, -1.0, 1.0],
               "components": [{"type": "density", "kind": "constant", "params": {"value": 1.0},
                               "weight": 1.0},
                              {"type": "atom", "point": [0.0, 0.0], "weight": 1.0}]}
    return ExperimentConfig(
        name="dirac-ladder",
        description="Mollified atom plus Lebesgue: centre value and small-ball volume across sigma",
        start={"measure": measure},
        sigma_ladder=[0.1, 0.05, 0.025],
        grid_ladder=[[81, 81], [161, 161], [321, 321]],
        domain={"topology": "plane", "x0": -1.0, "x1": 1.0, "y0": -1.0, "y1": 1.0},
        schedule={"t_start": 5e-5, "t_end": 0.15, "q": 0.05, "chen_cap": True},
        bc={"kind": "big_bang_barrier", "init": "max"},
        snapshots=[0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15],
        # a mollified atom of mass m carries a bubble losing area at rate up to 4 pi; the
        # neck pinch is slower, so the transient ends near 2 m/(4 pi) = 0.16 for small sigma
        checks=[{"name": "dirac_value", "params": {"point": [0.0, 0.0], "t": 0.01}},
                {"name": "dirac_volume", "params": {"t": 0.15, "radii": [0.05, 0.1]}},
                {"name": "bubble_mass", "params": {"radius": 0.1,
                                                   "times": [0.002, 0.005, 0.01, 0.02, 0.05, 0.1,
                                                             0.15]}}]
        + _common_checks(),
        ladder_checks=[{"name": "ladder_spread", "params": {"metric": "u_center", "max_factor": 2.0}}],
        allow_atoms=True,
    )


def _estimates_suite() -> ExperimentConfig:
    measure = {"domain": [-4.0, 4.0, -0.16, 0.16],
               "components": [{"type": "curve", "kind": "line",
                               "params": {"point": [0.0, 0.0], "direction": [0.0, 1.0]},
                               "weight": 2 * math.pi}]}
    times = [0.0625, 0.125, 0.25, 0.5, 1.0]
    exact = _line_fixture(times)
    early = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0]
    base = _line_fixture(early)
    others = [_line_fixture(early, s, x0) for s in (2.0, 4.0, 8.0) for x0 in (2.1, 2.5, 3.0)]
    bigbang = {"solution": {"kind": "big_bang_disc", "radius": 1.0, "center": [0.0, 0.0]},
               "grid": {"nx": 191, "ny": 191, "x0": -0.95, "x1": 0.95, "y0": -0.95, "y1": 0.95,
                        "topology": "plane"},
               "times": [1e-4, 0.25, 0.5, 1.0], "support": [0.0, 0.0, 1.0]}
    lattice = {"x0": [0.0, 0.0], "rho": [0.25, 0.5, 1.0], "ratio": [2, 4],
               "offsets": [[0.5, 0.0], [0.0, 0.5]], "t2": 1.0}
    return ExperimentConfig(
        name="estimates-suite",
        description="Harnack, lower bound, upper bound, L1, volume and Green checks",
        start={"measure": measure, "background": 1e-8},
        sigma_ladder=[0.05],
        grid_ladder=[[401, 16]],
        domain={"topology": "strip", "x0": -4.0, "x1": 4.0, "y0": -0.16, "period": 0.32},
        schedule={"t_start": 1e-4, "t_end": 1.0, "q": 0.05},
        bc={"kind": "big_bang_barrier", "init": "max"},
        snapshots=times,
        checks=[{"name": "harnack", "params": dict(lattice)},
                {"name": "harnack", "params": dict(lattice, fixture=exact)},
                {"name": "lower_corollary", "params": dict(lattice)},
                {"name": "lower_corollary", "params": dict(lattice, fixture=exact)},
                {"name": "upper_theorem", "params": {"center": [0.0, 0.0], "radii": [0.25, 0.5, 1.0],
                                                     "fixture": exact}},
                {"name": "l1_contraction", "params": {"base": base, "others": others, "eps": 0.01}},
                {"name": "l1_comparison", "params": {"base": base, "others": others}},
                {"name": "volume_upper", "params": {"r": 0.5, "s": 0.9, "fixture": bigbang}},
                {"name": "green", "params": {"rhos": [0.5, 1.0, 2.0]}},
                {"name": "mean_value", "params": {}}]
        + _common_checks(),
    )


def _weak_attainment() -> ExperimentConfig:
    measure = {"domain": [-2.0, 2.0, -2.0, 2.0],
               "components": [{"type": "density", "kind": "constant", "params": {"value": 1.0},
                               "weight": 1.0},
                              {"type": "density", "kind": "gaussian",
                               "params": {"center": [0.0, 0.0], "width": 0.3}, "weight": 1.0}]}
    return ExperimentConfig(
        name="weak-attainment",
        description="Initial data attained weakly and in L1 along a joint (sigma, h, t_start) ladder",
        start={"measure": measure},
        sigma_ladder=[0.04, 0.02, 0.01],
        grid_ladder=[[101, 101], [201, 201], [401, 401]],
        domain={"topology": "plane", "x0": -2.0, "x1": 2.0, "y0": -2.0, "y1": 2.0},
        # the barrier start leaves a kink near the edges that decays within a few t_start,
        # so the first snapshot sits well after it
        schedule={"t_start_ladder": [2e-4, 1e-4, 5e-5], "q": 0.05, "snapshots_rel": True},
        bc={"kind": "big_bang_barrier", "init": "max"},
        snapshots=[40.0, 60.0],
        checks=[{"name": "l1_attainment", "params": {"center": [0.0, 0.0], "radius": 1.0}},
                {"name": "weak_pairing", "params": {"bumps": [
                    {"center": [0.0, 0.0], "radius": 0.5, "normalized": False},
                    {"center": [0.5, 0.3], "radius": 0.4, "normalized": False}]}}]
        + _common_checks(),
        ladder_checks=[{"name": "ladder_decreasing", "params": {"metric": "l1_rel", "final_max": 0.02}},
                       {"name": "ladder_decreasing", "params": {"metric": "weak_deviation"}}],
    )


BUILTINS = {
    "soliton-verify": (_soliton_verify, "line soliton regression and curvature window"),
    "halfplane-profile": (_halfplane_profile, "half-plane profile F by shooting"),
    "translating": (_translating, "translating soliton on the cylinder"),
    "rotating": (_rotating, "rotating spiral soliton, self-similarity check"),
    "counterexample": (_counterexample, "Lebesgue plus a line: distance and slice mass"),
    "dirac-ladder": (_dirac_ladder, "mollified atom: no mass persists at a point"),
    "estimates-suite": (_estimates_suite, "Harnack, lower/upper bounds, L1 and volume lemmas"),
    "weak-attainment": (_weak_attainment, "weak and L1 attainment of initial data"),
}


def list_experiments() -> list[tuple[str, str]]:
    return [(k, BUILTINS[k][1]) for k in BUILTINS]


def builtin_config(name: str) -> ExperimentConfig:
    if name not in BUILTINS:
        raise ConfigurationError(f"no builtin experiment {name!r}")
    return BUILTINS[name][0]()


def worker_count() -> int:
    """Process count for independent experiments (``LOGFLOW_WORKERS``, default 1)."""
    raw = os.environ.get("LOGFLOW_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"LOGFLOW_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, n)
