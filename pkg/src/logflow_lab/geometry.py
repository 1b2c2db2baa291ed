"""Geometric functionals of a conformal metric ``u (dx^2 + dy^2)`` on a grid."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import DomainError
from .grid import Grid, ScalarField, axis_weights, disc_weights, integrate, rect_weights
from .measure import MeasureSpec, RadialBump, Rect, test_pairing
from .solver import FlowState, Trajectory, laplacian_log


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("disc radius must be positive")


def gauss_curvature(s: FlowState) -> ScalarField:
    """``K = -Delta log u / (2u)``; edge nodes copy their interior neighbour."""
    lap = laplacian_log(s.u)
    return ScalarField(s.grid, -lap.values / (2 * s.u.values))


def region_weights(grid: Grid, region):
    if isinstance(region, Disc):
        return disc_weights(grid, region.center, region.radius)
    if isinstance(region, Rect):
        return rect_weights(grid, region.as_tuple())
    if len(region) == 4:
        return rect_weights(grid, region)
    raise DomainError(f"unsupported region {region!r}")


def volume(s: FlowState, region) -> float:
    """Riemannian area ``int_region u`` with rim cells weighted by area fraction."""
    return integrate(s.u.values, region_weights(s.grid, region))


def slice_mass(s: FlowState, y: float, xr: tuple[float, float]) -> float:
    """``int u(x, y) dx`` over ``xr`` along one horizontal line."""
    g = s.grid
    a, b = map(float, xr)
    if b <= a:
        raise DomainError("empty slice interval")
    if not g.periodic_x and (a < g.x0 - 1e-9 or b > g.x1 + 1e-9):
        raise DomainError("slice escapes the grid in x")
    if not g.periodic_y and not (g.y0 - 1e-9 <= y <= g.y1 + 1e-9):
        raise DomainError("slice escapes the grid in y")
    fj = (y - g.y0) / g.hy
    if abs(fj - round(fj)) < 1e-9:
        row = s.u.values[:, int(round(fj)) % g.ny]
    else:
        row = s.u.sample(g.x, np.full(g.nx, y))
    idx, w = axis_weights(g.nx, g.hx, g.x0, g.periodic_x, a, b)
    order = np.argsort(idx, kind="stable")
    return float(np.sum(row[idx[order]] * w[order]))


# ---------------------------------------------------------------------------
# distances

STENCIL16 = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)]


@dataclass
class DistanceResult:
    p: tuple[float, float]
    q: tuple[float, float]
    value: float
    path: np.ndarray = field(repr=False)
    method: str = "lattice-dijkstra"

    def to_dict(self) -> dict:
        return {"p": list(self.p), "q": list(self.q), "value": self.value, "method": self.method,
                "path_nodes": int(len(self.path))}


def _lattice_graph(grid: Grid, u: np.ndarray, allowed: np.ndarray):
    nx, ny = grid.shape
    root = np.sqrt(np.sqrt(u))  # u^(1/4); edge weight uses sqrt(u_a) * sqrt(u_b) under a root
    I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    rows, cols, vals = [], [], []
    for di, dj in STENCIL16:
        I2, J2 = I + di, J + dj
        ok = np.ones_like(I, dtype=bool)
        if grid.periodic_x:
            I2 = I2 % nx
        else:
            ok &= (I2 >= 0) & (I2 < nx)
        if grid.periodic_y:
            J2 = J2 % ny
        else:
            ok &= (J2 >= 0) & (J2 < ny)
        I2c, J2c = np.clip(I2, 0, nx - 1), np.clip(J2, 0, ny - 1)
        ok &= allowed & allowed[I2c, J2c]
        length = math.hypot(di * grid.hx, dj * grid.hy)
        a = (I * ny + J)[ok]
        b = (I2c * ny + J2c)[ok]
        rows.append(a)
        cols.append(b)
        vals.append(length * root[I[ok], J[ok]] * root[I2c[ok], J2c[ok]])
    n = nx * ny
    W = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return W


def _fast_marching(grid: Grid, u: np.ndarray, src: tuple[int, int], allowed: np.ndarray) -> np.ndarray:
    """First-order fast marching for ``|grad T| = sqrt(u)`` from one node."""
    nx, ny = grid.shape
    hx, hy = grid.hx, grid.hy
    T = np.full((nx, ny), np.inf)
    done = np.zeros((nx, ny), dtype=bool)
    T[src] = 0.0
    heap = [(0.0, src)]
    speed = np.sqrt(u)

    def nb(i, j):
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if grid.periodic_x:
                a %= nx
            if grid.periodic_y:
                b %= ny
            if 0 <= a < nx and 0 <= b < ny and allowed[a, b]:
                yield a, b

    def axis_min(i, j, axis):
        best = np.inf
        for d in (1, -1):
            a, b = (i + d, j) if axis == 0 else (i, j + d)
            if grid.periodic_x:
                a %= nx
            if grid.periodic_y:
                b %= ny
            if 0 <= a < nx and 0 <= b < ny and done[a, b]:
                best = min(best, T[a, b])
        return best

    while heap:
        t, (i, j) = heapq.heappop(heap)
        if done[i, j]:
            continue
        done[i, j] = True
        for a, b in nb(i, j):
            if done[a, b]:
                continue
            f = speed[a, b]
            tx, ty = axis_min(a, b, 0), axis_min(a, b, 1)
            cand = min(tx + f * hx, ty + f * hy)
            if np.isfinite(tx) and np.isfinite(ty):
                # two-sided update: ((T-tx)/hx)^2 + ((T-ty)/hy)^2 = f^2
                A = 1 / hx ** 2 + 1 / hy ** 2
                B = -2 * (tx / hx ** 2 + ty / hy ** 2)
                C = tx ** 2 / hx ** 2 + ty ** 2 / hy ** 2 - f * f
                disc = B * B - 4 * A * C
                if disc >= 0:
                    root = (-B + math.sqrt(disc)) / (2 * A)
                    if root >= max(tx, ty):
                        cand = min(cand, root)
            if cand < T[a, b]:
                T[a, b] = cand
                heapq.heappush(heap, (cand, (a, b)))
    return T


def _descend(grid: Grid, T: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    nx, ny = grid.shape
    path = [start]
    cur = start
    while T[cur] > 0:
        best = cur
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                a, b = cur[0] + di, cur[1] + dj
                if grid.periodic_x:
                    a %= nx
                if grid.periodic_y:
                    b %= ny
                if 0 <= a < nx and 0 <= b < ny and T[a, b] < T[best]:
                    best = (a, b)
        if best == cur:
            break
        cur = best
        path.append(cur)
    return path


def riemannian_distance(s: FlowState, p, q, method: str = "dijkstra", mask=None) -> DistanceResult:
    """Length of the shortest lattice path between the nodes nearest ``p`` and ``q``.

    ``dijkstra`` uses a 16-neighbour lattice whose edge weight is the
    Euclidean length times ``(u_a u_b)^(1/4)``; ``fmm`` solves the eikonal
    equation to first order. ``mask`` restricts the admissible nodes.
    """
    g = s.grid
    ip = s.u.node_index(*p)
    iq = s.u.node_index(*q)
    allowed = np.ones(g.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not (allowed[ip] and allowed[iq]):
        raise DomainError("endpoints lie outside the admissible region")
    u = s.u.values
    if method == "dijkstra":
        W = _lattice_graph(g, u, allowed)
        src = ip[0] * g.ny + ip[1]
        dist, pred = csgraph.dijkstra(W, directed=False, indices=src, return_predecessors=True)
        dst = iq[0] * g.ny + iq[1]
        value = float(dist[dst])
        if not np.isfinite(value):
            raise DomainError("target unreachable inside the admissible region")
        nodes = [dst]
        while nodes[-1] != src:
            nodes.append(pred[nodes[-1]])
        nodes = nodes[::-1]
        ij = [(k // g.ny, k % g.ny) for k in nodes]
        name = "lattice-dijkstra"
    elif method == "fmm":
        T = _fast_marching(g, u, ip, allowed)
        value = float(T[iq])
        if not np.isfinite(value):
            raise DomainError("target unreachable inside the admissible region")
        ij = _descend(g, T, iq)[::-1]
        name = "fast-marching"
    else:
        raise DomainError(f"unknown distance method {method!r}")
    path = np.array([(g.x[i], g.y[j]) for i, j in ij])
    pp = (float(g.x[ip[0]]), float(g.y[ip[1]]))
    qq = (float(g.x[iq[0]]), float(g.y[iq[1]]))
    return DistanceResult(pp, qq, value, path, name)


def chord_length(s: FlowState, p, q, n: int = 2001) -> float:
    """Length of the straight segment ``pq`` in the metric (an upper bound)."""
    tt = np.linspace(0.0, 1.0, n)
    x = p[0] + tt * (q[0] - p[0])
    y = p[1] + tt * (q[1] - p[1])
    root = np.sqrt(np.maximum(s.u.sample(x, y), 0.0))
    return float(np.trapezoid(root, tt) * math.hypot(q[0] - p[0], q[1] - p[1]))


# ---------------------------------------------------------------------------
# weak convergence

def weak_pairing(s: FlowState, psi: RadialBump) -> float:
    """``int psi u`` over the support disc of ``psi``."""
    I, J, w = disc_weights(s.grid, psi.center, psi.radius)
    X = s.grid.x[I]
    Y = s.grid.y[J]
    # wrap periodic coordinates to the copy nearest the bump centre
    if s.grid.periodic_x:
        X = X + s.grid.period_x * np.round((psi.center[0] - X) / s.grid.period_x)
    if s.grid.periodic_y:
        Y = Y + s.grid.period_y * np.round((psi.center[1] - Y) / s.grid.period_y)
    vals = psi(X, Y) * s.u.values[I, J]
    order = np.lexsort((J, I))
    return float(np.sum(vals[order] * w[order]))


@dataclass
class WeakConvergenceRow:
    psi: dict
    t: float
    pairing: float
    target: float

    @property
    def deviation(self) -> float:
        return abs(self.pairing - self.target)

    def to_dict(self) -> dict:
        return {"psi": self.psi, "t": self.t, "pairing": self.pairing, "target": self.target,
                "deviation": self.deviation}


@dataclass
class WeakConvergenceReport:
    rows: list[WeakConvergenceRow]
    l1: list[dict] = field(default_factory=list)

    def earliest(self) -> dict:
        """Largest deviation over the test family at the earliest snapshot."""
        t0 = min(r.t for r in self.rows)
        return {"t": t0, "deviation": max(r.deviation for r in self.rows if r.t == t0)}

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows], "l1": self.l1, "earliest": self.earliest()}


def l1_distance(s: FlowState, u0, region) -> float:
    """``int_region |u - u0|`` for a reference field or callable ``u0``."""
    if callable(u0):
        X, Y = s.grid.mesh()
        ref = np.asarray(u0(X, Y), dtype=float)
    else:
        ref = u0.values if isinstance(u0, ScalarField) else np.asarray(u0)
    return integrate(np.abs(s.u.values - ref), region_weights(s.grid, region))


def weak_convergence_report(traj: Trajectory, m: MeasureSpec, psi_family,
                            u0=None, l1_region=None) -> WeakConvergenceReport:
    """Pairings ``int psi u(t)`` against ``int psi dmu`` for every snapshot.

    With ``u0`` (the density of the measure on ``l1_region``) the report
    also records ``int |u(t) - u0|`` per snapshot.
    """
    targets = [test_pairing(m, psi) for psi in psi_family]
    rows = []
    for s in traj:
        for psi, tgt in zip(psi_family, targets):
            rows.append(WeakConvergenceRow(psi.to_dict(), s.t, weak_pairing(s, psi), tgt))
    report = WeakConvergenceReport(rows)
    if u0 is not None and l1_region is not None:
        report.l1 = [{"t": s.t, "l1": l1_distance(s, u0, l1_region)} for s in traj]
    return report


def ladder_decreasing(values) -> bool:
    """True when a refinement-ladder sequence strictly decreases."""
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))
