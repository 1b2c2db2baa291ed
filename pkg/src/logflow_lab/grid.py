"""Structured grids, scalar fields on them, region quadrature and field dumps.

Arrays are indexed ``values[i, j]`` with ``i`` running along x and ``j``
along y.  A periodic axis stores ``n`` distinct nodes; the node at index
``n`` is identified with index 0, so the period is ``n * h``.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError

TOPOLOGIES = ("plane", "strip", "annulus", "torus")
MIN_NODES = 16
HEADER_BYTES = 64
MAGIC = "LOGFLOW"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Grid:
    """Node lattice on ``[x0, x1] x [y0, y1]``.

    ``strip`` is periodic in y, ``annulus`` is the log-polar chart
    ``(log r, theta)`` and is periodic in y with period 2*pi, ``torus`` is
    periodic in both axes.
    """

    nx: int
    ny: int
    x0: float
    x1: float
    y0: float
    y1: float
    topology: str = "plane"

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigurationError(f"unknown topology {self.topology!r}")
        if self.nx < MIN_NODES or self.ny < MIN_NODES:
            raise ConfigurationError(f"grids need at least {MIN_NODES} nodes per axis")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigurationError("grid extents must be increasing")
        if self.topology == "annulus":
            if abs(self.period_y - 2 * np.pi) > 1e-9:
                raise ConfigurationError("annulus grids need a y period of exactly 2*pi")

    @classmethod
    def periodic(cls, nx: int, ny: int, x0: float, x1: float, y0: float,
                 period: float, topology: str = "strip") -> "Grid":
        """Grid whose y axis wraps with the given period."""
        return cls(nx, ny, x0, x1, y0, y0 + period * (ny - 1) / ny, topology)

    @classmethod
    def log_polar(cls, ns: int, ntheta: int, s0: float, s1: float) -> "Grid":
        return cls.periodic(ns, ntheta, s0, s1, 0.0, 2 * np.pi, "annulus")

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def periodic_x(self) -> bool:
        return self.topology == "torus"

    @property
    def periodic_y(self) -> bool:
        return self.topology != "plane"

    @property
    def period_x(self) -> float:
        return self.nx * self.hx

    @property
    def period_y(self) -> float:
        return self.ny * self.hy

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def boundary_mask(self) -> np.ndarray:
        """Nodes on a non-periodic edge."""
        mask = np.zeros(self.shape, dtype=bool)
        if not self.periodic_x:
            mask[0, :] = mask[-1, :] = True
        if not self.periodic_y:
            mask[:, 0] = mask[:, -1] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def box(self) -> tuple[float, float, float, float]:
        """Covered rectangle; periodic axes report one full period."""
        x1 = self.x0 + self.period_x if self.periodic_x else self.x1
        y1 = self.y0 + self.period_y if self.periodic_y else self.y1
        return (self.x0, x1, self.y0, y1)

    def refined(self, factor: int = 2) -> "Grid":
        """Grid with spacing divided by ``factor`` on the same extents."""
        nx = self.nx * factor if self.periodic_x else (self.nx - 1) * factor + 1
        if self.periodic_y:
            return Grid.periodic(nx, self.ny * factor, self.x0, self.x1, self.y0,
                                 self.period_y, self.topology)
        return Grid(nx, (self.ny - 1) * factor + 1, self.x0, self.x1, self.y0,
                    self.y1, self.topology)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "x0": self.x0, "x1": self.x1,
                "y0": self.y0, "y1": self.y1, "topology": self.topology}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["nx"]), int(d["ny"]), float(d["x0"]), float(d["x1"]),
                   float(d["y0"]), float(d["y1"]), d.get("topology", "plane"))


@dataclass(eq=False)
class ScalarField:
    """Values on the nodes of a grid."""

    grid: Grid
    values: np.ndarray
    _coeffs: np.ndarray | None = field(default=None, init=False, repr=False)

    PAD = 8

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape).copy())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def _spline_coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            arr = self.values
            p = self.PAD
            if self.grid.periodic_y:
                arr = np.concatenate([arr[:, -p:], arr, arr[:, :p]], axis=1)
            if self.grid.periodic_x:
                arr = np.concatenate([arr[-p:, :], arr, arr[:p, :]], axis=0)
            self._coeffs = ndimage.spline_filter(arr, order=3, mode="nearest")
        return self._coeffs

    def _index_coords(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fi = (x - g.x0) / g.hx
        fj = (y - g.y0) / g.hy
        tol = 1e-9
        if g.periodic_x:
            fi = np.mod(fi, g.nx) + self.PAD
        elif np.any(fi < -tol) or np.any(fi > g.nx - 1 + tol):
            raise DomainError("sample point outside the grid in x")
        if g.periodic_y:
            fj = np.mod(fj, g.ny) + self.PAD
        elif np.any(fj < -tol) or np.any(fj > g.ny - 1 + tol):
            raise DomainError("sample point outside the grid in y")
        return fi, fj

    def sample(self, x, y, order: int = 3) -> np.ndarray:
        """Interpolated values at arbitrary points (cubic spline by default)."""
        fi, fj = self._index_coords(x, y)
        fi, fj = np.broadcast_arrays(fi, fj)
        if order == 3:
            return ndimage.map_coordinates(self._spline_coeffs(), [fi.ravel(), fj.ravel()],
                                           order=3, mode="nearest",
                                           prefilter=False).reshape(fi.shape)
        arr = self.values
        p = self.PAD
        if self.grid.periodic_y:
            arr = np.concatenate([arr[:, -p:], arr, arr[:, :p]], axis=1)
        if self.grid.periodic_x:
            arr = np.concatenate([arr[-p:, :], arr, arr[:p, :]], axis=0)
        return ndimage.map_coordinates(arr, [fi.ravel(), fj.ravel()], order=order,
                                       mode="nearest").reshape(fi.shape)

    def node_index(self, x: float, y: float) -> tuple[int, int]:
        """Indices of the node nearest to ``(x, y)``."""
        g = self.grid
        i = int(round((x - g.x0) / g.hx))
        j = int(round((y - g.y0) / g.hy))
        if g.periodic_x:
            i %= g.nx
        if g.periodic_y:
            j %= g.ny
        if not (0 <= i < g.nx and 0 <= j < g.ny):
            raise DomainError(f"point ({x}, {y}) is not on the grid")
        return i, j


# ---------------------------------------------------------------------------
# region quadrature

def _axis_nodes(n: int, h: float, origin: float, periodic: bool, lo: float, hi: float):
    """Unwrapped node indices whose cells can meet ``[lo, hi]``."""
    k0 = int(np.floor((lo - origin) / h)) - 1
    k1 = int(np.ceil((hi - origin) / h)) + 1
    if not periodic:
        k0, k1 = max(k0, 0), min(k1, n - 1)
    k = np.arange(k0, k1 + 1)
    return k, origin + h * k, np.mod(k, n)


def _quadrant_area(x, y, R: float):
    """Signed area of ``[0, x] x [0, y]`` inside the disc of radius ``R`` at the origin."""
    sx, sy = np.sign(x), np.sign(y)
    x = np.minimum(np.abs(x), R)
    y = np.minimum(np.abs(y), R)
    # columns s < s_star are cut by the top edge, the rest by the circle
    s_star = np.sqrt(np.maximum(R * R - y * y, 0.0))
    s_mid = np.minimum(x, s_star)

    def arc(s):
        return 0.5 * (s * np.sqrt(np.maximum(R * R - s * s, 0.0)) + R * R * np.arcsin(np.clip(s / R, -1, 1)))

    area = y * s_mid + np.where(x > s_star, arc(x) - arc(s_star), 0.0)
    return sx * sy * area


def disc_weights(grid: Grid, center, radius: float):
    """Quadrature weights for a disc: ``(i, j, w)`` with ``sum w f[i, j]``.

    Each node carries the exact area of its cell inside the disc.
    """
    cx, cy = float(center[0]), float(center[1])
    if radius <= 0:
        raise DomainError("disc radius must be positive")
    tol = 1e-12 * max(1.0, radius)
    if not grid.periodic_x and (cx - radius < grid.x0 - tol or cx + radius > grid.x1 + tol):
        raise DomainError("disc escapes the grid in x")
    if not grid.periodic_y and (cy - radius < grid.y0 - tol or cy + radius > grid.y1 + tol):
        raise DomainError("disc escapes the grid in y")
    hx, hy = grid.hx, grid.hy
    ki, xs, im = _axis_nodes(grid.nx, hx, grid.x0, grid.periodic_x, cx - radius, cx + radius)
    kj, ys, jm = _axis_nodes(grid.ny, hy, grid.y0, grid.periodic_y, cy - radius, cy + radius)
    X, Y = np.meshgrid(xs - cx, ys - cy, indexing="ij")
    a, b = X - hx / 2, X + hx / 2
    c, d = Y - hy / 2, Y + hy / 2
    R = float(radius)
    area = (_quadrant_area(b, d, R) - _quadrant_area(a, d, R)
            - _quadrant_area(b, c, R) + _quadrant_area(a, c, R))
    area = np.clip(area, 0.0, hx * hy)
    # cells of edge nodes stick out of the box; the disc never reaches there
    keep = area > 0
    I = np.broadcast_to(im[:, None], area.shape)[keep]
    J = np.broadcast_to(jm[None, :], area.shape)[keep]
    return I, J, area[keep]


def axis_weights(n: int, h: float, origin: float, periodic: bool, lo: float, hi: float):
    """1-D cell overlaps of ``[lo, hi]``: node indices and lengths."""
    k, xs, km = _axis_nodes(n, h, origin, periodic, lo, hi)
    left = np.maximum(xs - h / 2, lo)
    right = np.minimum(xs + h / 2, hi)
    return km, np.clip(right - left, 0.0, None)


def rect_weights(grid: Grid, rect):
    """Quadrature weights for an axis-aligned rectangle ``(a, b, c, d)``."""
    a, b, c, d = map(float, rect)
    if b <= a or d <= c:
        raise DomainError("empty rectangle")
    tol = 1e-9
    if not grid.periodic_x and (a < grid.x0 - tol or b > grid.x1 + tol):
        raise DomainError("rectangle escapes the grid in x")
    if not grid.periodic_y and (c < grid.y0 - tol or d > grid.y1 + tol):
        raise DomainError("rectangle escapes the grid in y")

    im, wx = axis_weights(grid.nx, grid.hx, grid.x0, grid.periodic_x, a, b)
    jm, wy = axis_weights(grid.ny, grid.hy, grid.y0, grid.periodic_y, c, d)
    W = np.outer(wx, wy)
    keep = W > 0
    I = np.broadcast_to(im[:, None], W.shape)[keep]
    J = np.broadcast_to(jm[None, :], W.shape)[keep]
    return I, J, W[keep]


def integrate(values: np.ndarray, weights) -> float:
    """Weighted sum in a fixed (sorted-index) order for reproducibility."""
    I, J, w = weights
    order = np.lexsort((J, I))
    return float(np.sum(values[I[order], J[order]] * w[order]))


# ---------------------------------------------------------------------------
# field dumps

def _header(grid: Grid) -> bytes:
    text = f"{MAGIC} v{FORMAT_VERSION} nx={grid.nx} ny={grid.ny} topo={grid.topology}"
    raw = text.encode("ascii")
    if len(raw) > HEADER_BYTES - 1:
        raise ConfigurationError("header overflow")
    return raw.ljust(HEADER_BYTES - 1, b" ") + b"\n"


def write_field_binary(path, f: ScalarField, t: float = float("nan")) -> None:
    """64-byte text header, five float64 (x0, x1, y0, y1, t), then values."""
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(_header(g))
        fh.write(struct.pack("<5d", g.x0, g.x1, g.y0, g.y1, t))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field_binary(path) -> tuple[ScalarField, float]:
    data = Path(path).read_bytes()
    head = data[:HEADER_BYTES].decode("ascii").split()
    if not head or head[0] != MAGIC:
        raise ConfigurationError(f"{path}: not a field dump")
    kv = dict(item.split("=", 1) for item in head[2:])
    x0, x1, y0, y1, t = struct.unpack("<5d", data[HEADER_BYTES:HEADER_BYTES + 40])
    g = Grid(int(kv["nx"]), int(kv["ny"]), x0, x1, y0, y1, kv["topo"])
    vals = np.frombuffer(data[HEADER_BYTES + 40:], dtype="<f8").reshape(g.shape)
    return ScalarField(g, vals.copy()), t


def write_field_csv(path, f: ScalarField, t: float = float("nan")) -> None:
    g = f.grid
    X, Y = g.mesh()
    buf = io.StringIO()
    buf.write(f"# nx={g.nx} ny={g.ny} x0={g.x0!r} x1={g.x1!r} y0={g.y0!r} "
              f"y1={g.y1!r} t={t!r} topology={g.topology}\n")
    buf.write("x,y,u\n")
    np.savetxt(buf, np.column_stack([X.ravel(), Y.ravel(), f.values.ravel()]),
               delimiter=",", fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def read_field_csv(path) -> tuple[ScalarField, float]:
    with open(path) as fh:
        head = fh.readline().lstrip("#").split()
    kv = dict(item.split("=", 1) for item in head)
    g = Grid(int(kv["nx"]), int(kv["ny"]), float(kv["x0"]), float(kv["x1"]),
             float(kv["y0"]), float(kv["y1"]), kv.get("topology", "plane"))
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    return ScalarField(g, data[:, 2].reshape(g.shape)), float(kv["t"])
