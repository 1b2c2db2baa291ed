"""Backward-Euler solver for ``u_t = Delta log u`` on structured grids.

Unknowns are ``v = log u``; each step solves

    m * (exp(v) - u_old) = dt * (L v + b)

by damped Newton, where ``L`` is the 5-point Laplacian restricted to the
free nodes, ``b`` carries Dirichlet and flux data and ``m`` is a row
weight (1, or 1/2 on flux-boundary rows to keep the Jacobian symmetric).
"""

from __future__ import annotations

import functools
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solveh_banded

from .errors import ConfigurationError, DomainError, PositivityError, SolverError
from .grid import Grid, ScalarField, read_field_binary, write_field_binary

log = logging.getLogger(__name__)

TOL_NEWTON = 1e-10
DEGENERATE_FLOOR = 1e-12
BANDED_MAX = 64


@dataclass(frozen=True, eq=False)
class FlowState:
    u: ScalarField
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("flow states live at t > 0")
        vals = self.u.values
        if not np.all(np.isfinite(vals)):
            raise PositivityError("conformal factor has non-finite values")
        if vals.min() <= 0:
            raise PositivityError("conformal factor must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.u.grid


# ---------------------------------------------------------------------------
# discrete operators

def _axis_second_difference(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    D = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    if periodic:
        D[0, n - 1] = 1.0
        D[n - 1, 0] = 1.0
    return (D.tocsr() / (h * h))


@functools.lru_cache(maxsize=16)
def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """5-point Laplacian over all nodes (C order, x slowest).

    Rows of non-periodic edge nodes are meaningful only as stencils that
    reach outside the grid; solvers replace or drop them.
    """
    Dx = _axis_second_difference(grid.nx, grid.hx, grid.periodic_x)
    Dy = _axis_second_difference(grid.ny, grid.hy, grid.periodic_y)
    return (sp.kron(Dx, sp.identity(grid.ny)) + sp.kron(sp.identity(grid.nx), Dy)).tocsr()


def _lap_log_values(grid: Grid, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    hx2, hy2 = grid.hx ** 2, grid.hy ** 2
    if grid.periodic_x:
        out += (np.roll(v, 1, 0) - 2 * v + np.roll(v, -1, 0)) / hx2
    else:
        out[1:-1] += (v[:-2] - 2 * v[1:-1] + v[2:]) / hx2
    if grid.periodic_y:
        out += (np.roll(v, 1, 1) - 2 * v + np.roll(v, -1, 1)) / hy2
    else:
        out[:, 1:-1] += (v[:, :-2] - 2 * v[:, 1:-1] + v[:, 2:]) / hy2
    # boundary ring: copy the nearest interior value
    if not grid.periodic_x:
        out[0], out[-1] = out[1], out[-2]
    if not grid.periodic_y:
        out[:, 0], out[:, -1] = out[:, 1], out[:, -2]
    return out


def laplacian_log(f: ScalarField) -> ScalarField:
    """5-point Laplacian of ``log f``.

    Periodic axes wrap; on non-periodic edges the value is copied from the
    adjacent interior node (see ``grid.boundary_mask()``).
    """
    if np.any(f.values <= 0):
        raise PositivityError("laplacian_log needs a positive field")
    return ScalarField(f.grid, _lap_log_values(f.grid, np.log(f.values)))


# ---------------------------------------------------------------------------
# hyperbolic factor of the computational rectangle

def strip_factor(x, half_width: float, center: float = 0.0):
    """Complete curvature -1 factor of the strip ``|x - center| < a``."""
    z = np.pi * (np.asarray(x, dtype=float) - center) / (2 * half_width)
    return np.pi ** 2 / (4 * half_width ** 2 * np.cos(z) ** 2)


def _rectangle_proxy(grid: Grid, X, Y):
    """Sum of strip factors over the non-periodic axes of the grid box
    enlarged by one spacing on each side."""
    val = np.zeros(np.broadcast(X, Y).shape)
    if not grid.periodic_x:
        a = 0.5 * (grid.x1 - grid.x0) + grid.hx
        val = val + strip_factor(X, a, 0.5 * (grid.x0 + grid.x1))
    if not grid.periodic_y:
        a = 0.5 * (grid.y1 - grid.y0) + grid.hy
        val = val + strip_factor(Y, a, 0.5 * (grid.y0 + grid.y1))
    return val


@functools.lru_cache(maxsize=8)
def hyperbolic_factor(grid: Grid, tol: float = 1e-8) -> ScalarField:
    """Discrete solution of ``Delta_h log h = 2h`` (curvature -1).

    Boundary nodes take the strip-sum approximation for the box enlarged by
    one spacing; ``2t*h`` is then an exact solution of the discrete scheme.
    """
    if grid.periodic_x and grid.periodic_y:
        raise ConfigurationError("a torus carries no complete hyperbolic metric")
    X, Y = grid.mesh()
    v = np.log(_rectangle_proxy(grid, X, Y)).ravel()
    bmask = grid.boundary_mask().ravel()
    free = np.flatnonzero(~bmask)
    fixed = np.flatnonzero(bmask)
    L = laplacian_matrix(grid)
    A = L[free][:, free].tocsc()
    b = L[free][:, fixed] @ v[fixed]
    vf = v[free].copy()
    for _ in range(100):
        F = A @ vf + b - 2 * np.exp(vf)
        scale = np.max(2 * np.exp(vf))
        if np.max(np.abs(F)) <= tol * scale:
            break
        J = A - sp.diags(2 * np.exp(vf))
        dv = spla.spsolve(J.tocsc(), -F)
        step = 1.0
        norm0 = np.max(np.abs(F))
        while step > 1e-4:
            trial = vf + step * dv
            Ft = A @ trial + b - 2 * np.exp(trial)
            if np.max(np.abs(Ft)) < norm0:
                break
            step *= 0.5
        vf = vf + step * dv
    else:
        raise SolverError("Liouville solve did not converge")
    v[free] = vf
    return ScalarField(grid, np.exp(v).reshape(grid.shape))


# ---------------------------------------------------------------------------
# boundary conditions

@dataclass(frozen=True, eq=False)
class DirichletExact:
    """Prescribe an exact solution on every non-periodic edge node."""

    solution: object
    kind: str = field(default="dirichlet_exact", init=False)

    def validate(self, grid: Grid) -> None:
        if grid.periodic_x and grid.periodic_y:
            raise ConfigurationError("torus grids have no boundary for Dirichlet data")

    def dirichlet(self, grid: Grid, t: float):
        mask = grid.boundary_mask()
        X, Y = grid.mesh()
        return mask, np.asarray(self.solution.evaluate(X[mask], Y[mask], t), dtype=float)

    def flux(self, grid: Grid):
        return None

    def to_dict(self) -> dict:
        sol = self.solution.to_dict() if hasattr(self.solution, "to_dict") else repr(self.solution)
        return {"kind": self.kind, "solution": sol}


@dataclass(frozen=True, eq=False)
class BigBangBarrier:
    """``u = 2t*h`` on the edges, ``h`` the hyperbolic factor of the box.

    With ``init="max"`` the initial field is raised to ``max(u0, 2 t0 h)``
    so that the discrete comparison principle keeps every state above the
    barrier.
    """

    init: str = "max"
    kind: str = field(default="big_bang_barrier", init=False)

    def validate(self, grid: Grid) -> None:
        if grid.periodic_x and grid.periodic_y:
            raise ConfigurationError("BigBangBarrier needs at least one open axis")
        if self.init not in ("max", "none"):
            raise ConfigurationError(f"unknown barrier init {self.init!r}")

    def barrier(self, grid: Grid, t: float) -> np.ndarray:
        return 2 * t * hyperbolic_factor(grid).values

    def dirichlet(self, grid: Grid, t: float):
        mask = grid.boundary_mask()
        return mask, self.barrier(grid, t)[mask]

    def flux(self, grid: Grid):
        return None

    def prepare(self, u0: np.ndarray, grid: Grid, t0: float) -> np.ndarray:
        if self.init == "max":
            return np.maximum(u0, self.barrier(grid, t0))
        return u0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "init": self.init}


@dataclass(frozen=True, eq=False)
class Periodic:
    """No boundary at all: both axes wrap."""

    kind: str = field(default="periodic", init=False)

    def validate(self, grid: Grid) -> None:
        if not (grid.periodic_x and grid.periodic_y):
            raise ConfigurationError("Periodic boundary conditions need a torus grid")

    def dirichlet(self, grid: Grid, t: float):
        return np.zeros(grid.shape, dtype=bool), np.zeros(0)

    def flux(self, grid: Grid):
        return None

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class SpiralCone:
    """Boundary data for flows out of ``u0 = r^(alpha-2) f(theta + beta log r)``.

    Works in the log-polar chart where ``w = r^2 u`` obeys the same
    equation. The inner edge carries the smoothness condition
    ``d_s log w = 2 + |d_theta| log w`` (``inner="dtn"``, exact for a
    harmonic ``log u`` near the origin) or just ``d_s log w = 2``
    (``inner="flux"``); the outer edge the far-field expansion
    ``w0 + t (1 + beta^2) (log f)''``. Here ``f = 1 + a cos(k phi)``.

    ``inner="cusp"`` treats the chart as a cylinder whose left end is
    complete: ``d_s log w = sqrt(2 w / t)`` holds exactly for every
    big-bang cusp ``2t/(s - c)^2``. With ``alpha=1, beta=0`` this is the
    cylinder flow of ``e^x f(y)``, whose lift is the translating soliton.
    """

    amplitude: float
    beta: float
    alpha: float = 2.0
    mode: int = 1
    inner: str = "dtn"
    kind: str = field(default="spiral_cone", init=False)

    def validate(self, grid: Grid) -> None:
        if grid.topology != "annulus":
            raise ConfigurationError("SpiralCone needs a log-polar (annulus) grid")
        if not 0 <= self.amplitude < 1:
            raise ConfigurationError("amplitude must lie in [0, 1)")
        if self.inner not in ("dtn", "flux", "cusp"):
            raise ConfigurationError(f"unknown inner condition {self.inner!r}")

    def angular(self, phi):
        return 1 + self.amplitude * np.cos(self.mode * phi)

    def log_angular_dd(self, phi):
        a, k = self.amplitude, self.mode
        c = np.cos(k * phi)
        return -a * k * k * (c + a) / (1 + a * c) ** 2

    def initial(self, grid: Grid) -> ScalarField:
        S, T = grid.mesh()
        return ScalarField(grid, np.exp(self.alpha * S) * self.angular(T + self.beta * S))

    def far_field(self, s, theta, t):
        phi = theta + self.beta * s
        return (np.exp(self.alpha * s) * self.angular(phi)
                + t * (1 + self.beta ** 2) * self.log_angular_dd(phi))

    def dirichlet(self, grid: Grid, t: float):
        mask = np.zeros(grid.shape, dtype=bool)
        mask[-1, :] = True
        return mask, self.far_field(grid.x1, grid.y, t)

    def flux(self, grid: Grid):
        """Row mask on the inner edge and the prescribed ``d_s log w``.

        The value is a constant or a callable ``(v, t) -> (g, dg/dv)``.
        """
        mask = np.zeros(grid.shape, dtype=bool)
        mask[0, :] = True
        if self.inner == "cusp":
            return mask, _cusp_flux
        return mask, 2.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "amplitude": self.amplitude, "beta": self.beta,
                "alpha": self.alpha, "mode": self.mode, "inner": self.inner}


def _cusp_flux(v, t):
    g = np.sqrt(2.0 * np.exp(v) / t)
    return g, 0.5 * g


BoundaryCondition = DirichletExact | BigBangBarrier | Periodic | SpiralCone


def bc_from_dict(d: dict):
    """Inverse of the boundary conditions' ``to_dict``."""
    from .exactsol import solution_from_dict

    kind = d.get("kind")
    if kind == "dirichlet_exact":
        return DirichletExact(solution_from_dict(d["solution"]))
    if kind == "big_bang_barrier":
        return BigBangBarrier(d.get("init", "max"))
    if kind == "periodic":
        return Periodic()
    if kind == "spiral_cone":
        return SpiralCone(float(d["amplitude"]), float(d["beta"]), float(d.get("alpha", 2.0)),
                          int(d.get("mode", 1)), d.get("inner", "dtn"))
    raise ConfigurationError(f"unknown boundary condition {kind!r}")


# ---------------------------------------------------------------------------
# schedule and trajectory

@dataclass(frozen=True)
class TimeSchedule:
    """Geometric steps ``dt = min(q t, dt_max)`` clipped to hit targets."""

    t_start: float
    t_end: float
    q: float = 0.05
    dt_max: float = math.inf
    max_retries: int = 8
    tol_newton: float = TOL_NEWTON
    max_newton: int = 30

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_end > self.t_start):
            raise ConfigurationError("schedule needs 0 < t_start < t_end")
        if not (self.q > 0 and self.dt_max > 0):
            raise ConfigurationError("q and dt_max must be positive")

    def next_dt(self, t: float, target: float) -> float:
        dt = min(self.q * t, self.dt_max)
        # avoid a sliver step right before a target
        if t + 1.5 * dt >= target:
            return target - t if t + dt >= target else 0.5 * (target - t)
        return dt

    def steps(self) -> list[float]:
        """Times visited by an undisturbed run (no retries, no snapshots)."""
        ts = [self.t_start]
        while ts[-1] < self.t_end:
            ts.append(ts[-1] + self.next_dt(ts[-1], self.t_end))
        ts[-1] = self.t_end
        return ts

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["dt_max"] = None if math.isinf(self.dt_max) else self.dt_max
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TimeSchedule":
        d = dict(d)
        if d.get("dt_max") is None:
            d["dt_max"] = math.inf
        return cls(**d)


@dataclass
class Trajectory:
    """Snapshots in increasing time, immutable once emitted."""

    grid: Grid
    states: list[FlowState] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> FlowState:
        return self.states[i]

    def __iter__(self):
        return iter(self.states)

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.states]

    def at(self, t: float, rtol: float = 1e-9) -> FlowState:
        for s in self.states:
            if abs(s.t - t) <= rtol * max(1.0, abs(t)):
                return s
        raise DomainError(f"no snapshot at t={t}")

    def append(self, s: FlowState) -> None:
        if self.states and s.t <= self.states[-1].t:
            raise DomainError("snapshots must increase in time")
        s.u.values.setflags(write=False)
        self.states.append(s)

    def dump(self, directory) -> Path:
        """One binary file per snapshot plus ``trajectory.json``, written last."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        files = []
        for i, s in enumerate(self.states):
            name = f"snap_{i:04d}.bin"
            write_field_binary(d / name, s.u, s.t)
            files.append({"file": name, "t": s.t})
        manifest = {"grid": self.grid.to_dict(), "snapshots": files, "meta": self.meta}
        _atomic_write_text(d / "trajectory.json", json.dumps(manifest, indent=2, default=_json_default))
        return d / "trajectory.json"

    @classmethod
    def load(cls, directory) -> "Trajectory":
        d = Path(directory)
        manifest = json.loads((d / "trajectory.json").read_text())
        traj = cls(Grid.from_dict(manifest["grid"]), meta=manifest.get("meta", {}))
        for entry in manifest["snapshots"]:
            f, t = read_field_binary(d / entry["file"])
            traj.append(FlowState(f, t))
        return traj


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return repr(obj)


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# time stepping

def angular_dtn(n: int, period: float) -> np.ndarray:
    """Matrix of ``|d_theta|`` on ``n`` equispaced periodic samples.

    Fourier mode ``k`` is multiplied by ``|k| 2pi/period``: the radial
    log-derivative of the harmonic extension into a disc.
    """
    k = np.abs(np.fft.fftfreq(n, d=period / (2 * np.pi * n))) * 2 * np.pi / period
    eye = np.eye(n)
    D = np.real(np.fft.ifft(k[:, None] * np.fft.fft(eye, axis=0), axis=0))
    return 0.5 * (D + D.T)


class _System:
    """Free-node operator pieces for one grid and boundary condition."""

    def __init__(self, grid: Grid, bc):
        bc.validate(grid)
        self.grid = grid
        self.bc = bc
        L = laplacian_matrix(grid).tolil(copy=True)
        n = grid.nx * grid.ny
        self.weight = np.ones(n)
        self.source = np.zeros(n)
        flux = bc.flux(grid)
        self.flux_fn = None
        if flux is not None:
            fmask, g = flux
            hx = grid.hx
            if callable(g):
                self.flux_fn, g = g, 0.0
            for k in np.flatnonzero(fmask.ravel()):
                i = k // grid.ny
                if i != 0:
                    raise ConfigurationError("flux rows are supported on the x0 edge only")
                # ghost node v[-1] = v[1] - 2 hx g, then halve the row
                L[k, k + grid.ny] = 2.0 / hx ** 2
                self.weight[k] = 0.5
                self.source[k] = -2.0 * g / hx
        L = (sp.diags(self.weight) @ L.tocsr()).tocsr()
        self.source *= self.weight
        if flux is not None and getattr(bc, "inner", "flux") == "dtn":
            # flux g + |d_theta| v on the inner ring: halved row gains -D/hx
            ring = np.flatnonzero(fmask.ravel())
            D = angular_dtn(grid.ny, grid.period_y)
            L = L.tolil()
            L[np.ix_(ring, ring)] = L[np.ix_(ring, ring)].toarray() - D / grid.hx
            L = L.tocsr()
        dmask, _ = bc.dirichlet(grid, 1.0)
        self.dmask = dmask.ravel()
        self.free = np.flatnonzero(~self.dmask)
        self.fixed = np.flatnonzero(self.dmask)
        Lf = L[self.free]
        self.A = Lf[:, self.free].tocsr()
        self.B = Lf[:, self.fixed].tocsr()
        self.m = self.weight[self.free]
        self.c = self.source[self.free]
        if self.flux_fn is not None:
            # halved ring rows carry -g(v)/hx
            pos = np.full(n, -1)
            pos[self.free] = np.arange(self.free.size)
            self.ring = pos[np.flatnonzero(fmask.ravel())]
            if np.any(self.ring < 0):
                raise ConfigurationError("flux rows must be free nodes")
        # narrow-band Jacobians (open x axis, short y period) use banded Cholesky
        coo = self.A.tocoo()
        self.bandwidth = int(np.max(np.abs(coo.row - coo.col))) if coo.nnz else 0
        self.A_band = None
        if self.bandwidth <= BANDED_MAX:
            bw = self.bandwidth
            upper = coo.col >= coo.row
            ab = np.zeros((bw + 1, self.free.size))
            ab[bw + coo.row[upper] - coo.col[upper], coo.col[upper]] = coo.data[upper]
            self.A_band = ab

    def newton_solve(self, diag, dt, rhs):
        """Solve ``(diag - dt A) x = rhs``; the matrix is SPD."""
        if self.A_band is not None:
            ab = -dt * self.A_band
            ab[-1] += diag
            return solveh_banded(ab, rhs, check_finite=False)
        J = (sp.diags(diag) - dt * self.A).tocsc()
        return spla.splu(J, permc_spec="MMD_AT_PLUS_A").solve(rhs)

    def boundary_values(self, t: float) -> np.ndarray:
        _, vals = self.bc.dirichlet(self.grid, t)
        if np.any(np.asarray(vals) <= 0):
            raise PositivityError("boundary data must be positive")
        return np.asarray(vals, dtype=float)

    def flux_terms(self, vf, t):
        """Nonlinear ring source ``-g(v)/hx`` and its derivative, on free nodes."""
        src = np.zeros_like(vf)
        dsrc = np.zeros_like(vf)
        if self.flux_fn is not None:
            g, dg = self.flux_fn(vf[self.ring], t)
            src[self.ring] = -g / self.grid.hx
            dsrc[self.ring] = -dg / self.grid.hx
        return src, dsrc

    def residual(self, vf, u_old_f, b, dt, t):
        src, _ = self.flux_terms(vf, t)
        return self.m * (np.exp(vf) - u_old_f) - dt * (self.A @ vf + b + src)


def step(s: FlowState, dt: float, bc, tol: float = TOL_NEWTON, max_iter: int = 30,
         _system: _System | None = None) -> tuple[FlowState, int]:
    """One backward-Euler step; returns the new state and the Newton count.

    Raises ``SolverError`` if Newton does not reach ``tol`` (relative to the
    largest free value) within ``max_iter`` damped iterations.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    sysm = _system or _System(s.grid, bc)
    t_new = s.t + dt
    u_old = s.u.values.ravel()
    v_full = np.log(u_old).copy()
    v_bd = np.log(sysm.boundary_values(t_new))
    v_full[sysm.fixed] = v_bd
    b = sysm.B @ v_bd + sysm.c
    u_old_f = u_old[sysm.free]

    # explicit predictor in log space, clipped to a factor e
    lap = (sysm.A @ v_full[sysm.free] + b + sysm.flux_terms(v_full[sysm.free], s.t)[0]) / sysm.m
    vf = v_full[sysm.free] + np.clip(dt * lap / u_old_f, -1.0, 1.0)

    R = sysm.residual(vf, u_old_f, b, dt, t_new)
    rnorm = np.max(np.abs(R)) if R.size else 0.0
    it = 0
    while True:
        scale = max(np.max(sysm.m * np.exp(vf)), 1e-300) if R.size else 1.0
        if rnorm <= tol * scale:
            break
        if it >= max_iter or not np.isfinite(rnorm):
            raise SolverError(f"Newton stalled at t={t_new:.6g}", residual=rnorm / scale)
        # a monotone flux (dg/dv >= 0) keeps the Jacobian SPD
        dv = sysm.newton_solve(sysm.m * np.exp(vf) - dt * sysm.flux_terms(vf, t_new)[1], dt, -R)
        lam = 1.0
        while True:
            trial = vf + lam * dv
            Rt = sysm.residual(trial, u_old_f, b, dt, t_new)
            nt = np.max(np.abs(Rt))
            if nt < rnorm or lam < 1e-3:
                break
            lam *= 0.5
        vf, R, rnorm = trial, Rt, nt
        it += 1
    v_full[sysm.free] = vf
    u_new = np.exp(v_full).reshape(s.grid.shape)
    assert np.all(u_new > 0)
    return FlowState(ScalarField(s.grid, u_new), t_new), it


def _prepare_initial(u0: ScalarField) -> np.ndarray:
    vals = np.asarray(u0.values, dtype=float)
    if not np.all(np.isfinite(vals)) or vals.min() <= 0:
        raise PositivityError("initial field must be finite and strictly positive")
    floor = DEGENERATE_FLOOR * vals.mean()
    if vals.min() < floor:
        log.warning("initial field floored at %.3e (min was %.3e)", floor, vals.min())
        vals = np.maximum(vals, floor)
    return vals.copy()


def evolve(u0: ScalarField, sched: TimeSchedule, bc, snapshots=None) -> Trajectory:
    """Integrate from ``sched.t_start`` and emit states at the snapshot times.

    ``snapshots`` defaults to ``[t_end]``; ``t_start`` itself is emitted
    when listed. On failure ``SolverError.trajectory`` holds the partial run.
    """
    grid = u0.grid
    snaps = sorted(set(float(t) for t in (snapshots if snapshots is not None else [sched.t_end])))
    if any(t < sched.t_start or t > sched.t_end for t in snaps):
        raise ConfigurationError("snapshot times must lie inside the schedule")
    sysm = _System(grid, bc)
    vals = _prepare_initial(u0)
    if hasattr(bc, "prepare"):
        vals = bc.prepare(vals, grid, sched.t_start)
    # impose boundary data at the start time
    dmask, dvals = bc.dirichlet(grid, sched.t_start)
    vals.ravel()[dmask.ravel()] = dvals
    state = FlowState(ScalarField(grid, vals), sched.t_start)

    traj = Trajectory(grid, meta={"schedule": sched.to_dict(), "bc": bc.to_dict(),
                                  "tol_newton": sched.tol_newton, "newton_iterations": [],
                                  "step_times": []})
    targets = [t for t in snaps if t > sched.t_start]
    if snaps and snaps[0] == sched.t_start:
        traj.append(state)
    if sched.t_end not in targets:
        targets.append(sched.t_end)
    emit = set(snaps)
    for target in targets:
        while state.t < target * (1 - 1e-14):
            dt = sched.next_dt(state.t, target)
            for attempt in range(sched.max_retries + 1):
                try:
                    new, its = step(state, dt, bc, sched.tol_newton, sched.max_newton, sysm)
                    break
                except SolverError as exc:
                    last = exc
                    dt *= 0.5
            else:
                raise SolverError(f"step failed after {sched.max_retries} retries at t={state.t:.6g}",
                                  residual=last.residual, trajectory=traj)
            if abs(new.t - target) <= 1e-12 * target:
                new = FlowState(new.u, target)
            state = new
            traj.meta["newton_iterations"].append(its)
            traj.meta["step_times"].append(state.t)
        if target in emit:
            traj.append(state)
    return traj


def pde_residual(traj: Trajectory, i: int) -> ScalarField:
    """``(u_{i+1} - u_i)/dt - Delta log u_mid`` at interior nodes (0 on edges)."""
    if not 0 <= i < len(traj) - 1:
        raise DomainError("pde_residual needs snapshots i and i+1")
    a, b = traj[i], traj[i + 1]
    dt = b.t - a.t
    mid = 0.5 * (a.u.values + b.u.values)
    r = (b.u.values - a.u.values) / dt - _lap_log_values(traj.grid, np.log(mid))
    r[traj.grid.boundary_mask()] = 0.0
    return ScalarField(traj.grid, r)


def trajectory_from_solution(solution, grid: Grid, times, support=None) -> Trajectory:
    """Sample an exact solution into a Trajectory (for oracle checks).

    ``support = (cx, cy, R)`` evaluates only on the open disc and puts 1 at
    the remaining nodes, for solutions that blow up on a circle.
    """
    traj = Trajectory(grid, meta={"exact": solution.to_dict() if hasattr(solution, "to_dict") else None})
    X, Y = grid.mesh()
    inside = np.ones(grid.shape, dtype=bool)
    if support is not None:
        cx, cy, R = support
        inside = np.hypot(X - cx, Y - cy) < R
    for t in times:
        u = np.ones(grid.shape)
        u[inside] = np.asarray(solution.evaluate(X[inside], Y[inside], t), dtype=float)
        traj.append(FlowState(ScalarField(grid, u), float(t)))
    return traj
