"""Closed-form and profile-based reference flows of ``u_t = Delta log u``.

Every solution class exposes ``evaluate(x, y, t)`` (vectorised) and can
be used as Dirichlet data, as an oracle, or as a barrier.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigurationError, DomainError, ExtrapolationError, ShootingError
from .grid import ScalarField


def _check_time(t):
    if np.any(np.asarray(t) <= 0):
        raise DomainError("flows are defined for t > 0 only")


def line_soliton(x, t, c: float = 1.0):
    """Conformal factor of the flow out of ``2*pi*c`` times arclength on {x=0}.

    ``c = 1`` gives ``2t/(t^2 + x^2)``; other scales use the Ricci-flow
    rescaling ``c * u(x, t/c)``.
    """
    _check_time(t)
    if c <= 0:
        raise DomainError("scale must be positive")
    x = np.asarray(x, dtype=float)
    tc = np.asarray(t, dtype=float) / c
    out = c * 2 * tc / (tc * tc + x * x)
    return float(out) if out.ndim == 0 else out


def line_soliton_curvature(x, t):
    """Gauss curvature ``(t^2 - x^2) / (2t (t^2 + x^2))`` of the line soliton."""
    _check_time(t)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    out = (t * t - x * x) / (2 * t * (t * t + x * x))
    return float(out) if out.ndim == 0 else out


def poincare_disc_factor(p, R: float = 1.0):
    """``4R^2 / (R^2 - |p|^2)^2``: complete curvature -1 metric on ``B_R``."""
    p = np.asarray(p, dtype=float)
    r2 = np.sum(p * p, axis=-1)
    if np.any(r2 >= R * R):
        raise DomainError("point outside the open disc")
    out = 4 * R * R / (R * R - r2) ** 2
    return float(out) if np.ndim(out) == 0 else out


def hyperbolic_complement_factor(r, R: float = 1.0):
    """Complete hyperbolic factor on the exterior of ``B_R``: ``1/(r log(r/R))^2``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= R):
        raise DomainError("radius must exceed the excised disc")
    out = 1.0 / (r * np.log(r / R)) ** 2
    return float(out) if out.ndim == 0 else out


def hyperbolic_complement_area(r_in: float, R: float = 1.0) -> float:
    """Area of ``{|p| > r_in}`` for the complete metric on the exterior of B_R.

    Computed by radial quadrature; the closed form is ``2*pi/log(r_in/R)``.
    """
    if r_in <= R:
        raise DomainError("inner radius must exceed the excised disc")
    L = math.log(r_in / R)

    # with r = r_in e^z the area element 2 pi r^2 factor(r) dz is 2 pi/(z + L)^2,
    # which avoids overflowing r^2 in the slowly decaying tail
    def g(z):
        if z < 50.0:
            r = r_in * math.exp(z)
            return 2 * math.pi * r * r * float(hyperbolic_complement_factor(r, R))
        return 2 * math.pi / (z + L) ** 2
    val = sum(integrate.quad(g, a, b, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
              for a, b in ((0.0, 50.0), (50.0, np.inf)))
    return val


# ---------------------------------------------------------------------------
# half-plane profile

@dataclass
class ProfileF:
    """Tabulated decreasing solution of ``(log F)'' + (s/2) F' = 0``.

    Below the first sample ``F`` follows ``2/s^2`` scaled to match; above
    ``s_max`` the linearised tail ``1 + c*erfc(s/2)``.
    """

    s: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    s_max: float
    tol: float
    residual_max: float = float("nan")
    small_s_asymptote: bool = True
    large_s_asymptote: bool = True
    _spline: CubicHermiteSpline | None = field(default=None, init=False, repr=False)

    def _interp(self):
        if self._spline is None:
            G = np.log(self.F)
            self._spline = CubicHermiteSpline(self.s, G, self.dF / self.F)
        return self._spline

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        lo, hi = self.s[0], self.s[-1]
        mid = (s >= lo) & (s <= hi)
        out[mid] = np.exp(self._interp()(s[mid]))
        small = s < lo
        if np.any(small):
            # continue along the big-bang asymptote through the first sample
            out[small] = self.F[0] * (lo / np.maximum(s[small], 1e-300)) ** 2
        big = s > hi
        if np.any(big):
            w_end = self.F[-1] - 1.0
            out[big] = 1.0 + w_end * special.erfc(s[big] / 2) / special.erfc(hi / 2)
        return float(out) if out.ndim == 0 else out

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s < self.s[0]) | (s > self.s[-1])):
            raise DomainError("derivative only available on the tabulated range")
        return self(s) * self._interp().derivative()(s)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# s_max={self.s_max!r} tol={self.tol!r} residual_max={self.residual_max!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "F"])
        for si, fi in zip(self.s, self.F):
            w.writerow([repr(float(si)), repr(float(fi))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path_or_text) -> "ProfileF":
        text = str(path_or_text)
        if "\n" not in text:
            text = Path(text).read_text()
        lines = text.splitlines()
        meta = dict(item.split("=", 1) for item in lines[0].lstrip("#").split())
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
        s, F = data[:, 0], data[:, 1]
        # derivative from the ODE-consistent spline of log F on the stored nodes
        G = np.log(F)
        dG = np.gradient(G, s, edge_order=2)
        return cls(s, F, dG * F, float(meta["s_max"]), float(meta["tol"]),
                   float(meta["residual_max"]))


def _profile_rhs(s, y):
    # y = (w, w') with F = 1 + w; (log F)'' = -(s/2) F'
    w, dw = y
    F = 1.0 + w
    return [dw, -0.5 * s * F * dw + dw * dw / F]


def _shoot(kappa, s_max, s_end, rtol, dense=False):
    c = math.exp(kappa)
    w0 = c * special.erfc(s_max / 2)
    dw0 = -c * math.exp(-s_max * s_max / 4) / math.sqrt(math.pi)

    def blowup(s, y):
        return (1.0 + y[0]) * s * s / 2 - 4.0
    blowup.terminal = True
    blowup.direction = 1

    # the separatrix has F s^2/2 > 1 for all s; dropping below 1 means undershoot
    def undershoot(s, y):
        return (1.0 + y[0]) * s * s / 2 - 1.0
    undershoot.terminal = True
    undershoot.direction = -1

    # classify far inside s_end so the verdict does not bias the tabulated range
    sol = integrate.solve_ivp(_profile_rhs, (s_max, s_end * 1e-2), [w0, dw0], method="DOP853",
                              rtol=rtol, atol=1e-300, events=(blowup, undershoot),
                              dense_output=dense)
    if sol.status == 1:
        over = sol.t_events[0].size > 0
    else:
        over = (1.0 + sol.y[0, -1]) * sol.t[-1] ** 2 / 2 > 1.0
    return over, sol


def solve_halfplane_profile(s_max: float = 40.0, tol: float = 1e-8, s_min: float = 1e-2,
                            n_samples: int = 4000) -> ProfileF:
    """Shoot from ``s_max`` inward for the separatrix with ``F ~ 2/s^2`` at 0.

    The outer data is the linearised decay ``w = c erfc(s/2)``; ``log c`` is
    bisected between solutions that blow up at positive ``s`` and solutions
    that stay bounded at 0.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if 2.0 / s_max ** 2 > 0.1:
        raise DomainError("s_max too small for the outer linearisation")
    rtol = 1e-13
    lo, hi = -10.0, 10.0
    over_lo, _ = _shoot(lo, s_max, s_min, 1e-10)
    over_hi, _ = _shoot(hi, s_max, s_min, 1e-10)
    if over_lo or not over_hi:
        raise ShootingError("could not bracket the separatrix", (lo, hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        over, _ = _shoot(mid, s_max, s_min, rtol)
        if over:
            hi = mid
        else:
            lo = mid
    _, sol_lo = _shoot(lo, s_max, s_min, rtol, dense=True)
    _, sol_hi = _shoot(hi, s_max, s_min, rtol, dense=True)

    # keep only the range where both bracketing solutions agree
    s_dense = np.geomspace(s_min, s_max, n_samples)
    wl = sol_lo.sol(s_dense)
    wh_end = sol_hi.t[-1]
    valid = s_dense >= wh_end
    wh = np.full_like(s_dense, np.nan)
    wh[valid] = sol_hi.sol(s_dense[valid])[0]
    agree = valid & (np.abs(wh - wl[0]) <= 1e-9 * (1.0 + np.abs(wl[0])))
    first = int(np.argmax(agree))
    s = s_dense[first:]
    w, dw = wl[0][first:], wl[1][first:]
    F = 1.0 + w
    res = _profile_residual(sol_lo.sol, s[1:-1])
    prof = ProfileF(s, F, dw, s_max, tol, float(np.max(res)) if res.size else 0.0)
    return prof


def _profile_residual(dense, s):
    """|(log F)'' + (s/2)F'| / max(1, |(log F)''|) from the dense solution."""
    d = 1e-3 * s
    def dG(x):
        w, dw = dense(x)
        return dw / (1.0 + w)
    G2 = (-dG(s + 2 * d) + 8 * dG(s + d) - 8 * dG(s - d) + dG(s - 2 * d)) / (12 * d)
    w, dw = dense(s)
    r = G2 + 0.5 * s * dw
    return np.abs(r) / np.maximum(1.0, np.abs(G2))


# ---------------------------------------------------------------------------
# solution objects

@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def evaluate(self, x, y, t):
        return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(self.value))

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class LineSoliton:
    """``u = c * 2(t/c) / ((t/c)^2 + (x - x0)^2)``, independent of y."""

    scale: float = 1.0
    x0: float = 0.0

    def evaluate(self, x, y, t):
        x = np.asarray(x, dtype=float) - self.x0
        return np.broadcast_to(line_soliton(x, t, self.scale),
                               np.broadcast(x, np.asarray(y)).shape).astype(float)

    def to_dict(self):
        return {"kind": "line_soliton", "scale": self.scale, "x0": self.x0}


@dataclass(frozen=True)
class BigBangDisc:
    """``2t`` times the Poincare factor of the disc ``B_R(center)``."""

    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def evaluate(self, x, y, t):
        _check_time(t)
        p = np.stack(np.broadcast_arrays(np.asarray(x, float) - self.center[0],
                                         np.asarray(y, float) - self.center[1]), axis=-1)
        return 2 * t * np.asarray(poincare_disc_factor(p, self.radius))

    def to_dict(self):
        return {"kind": "big_bang_disc", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class HyperbolicComplement:
    """``2t`` times the complete hyperbolic factor outside ``B_R``."""

    radius: float = 1.0

    def evaluate(self, x, y, t):
        _check_time(t)
        return 2 * t * np.asarray(hyperbolic_complement_factor(np.hypot(x, y), self.radius))

    def to_dict(self):
        return {"kind": "hyperbolic_complement", "radius": self.radius}


@dataclass(frozen=True)
class HalfPlaneProfile:
    """``u = F(d/sqrt(t))`` with ``d`` the signed distance to the edge.

    ``axis="y"`` is the half plane ``{y > offset}``; ``axis="x"`` the half
    plane ``{x > offset}``.
    """

    profile: ProfileF
    axis: str = "y"
    offset: float = 0.0

    def evaluate(self, x, y, t):
        _check_time(t)
        d = (np.asarray(y, float) if self.axis == "y" else np.asarray(x, float)) - self.offset
        d = np.broadcast_to(d, np.broadcast(np.asarray(x), np.asarray(y)).shape)
        if np.any(d <= 0):
            raise DomainError("half-plane profile evaluated outside the half plane")
        return np.asarray(self.profile(d / math.sqrt(t)))

    def to_dict(self):
        return {"kind": "halfplane_profile", "axis": self.axis, "offset": self.offset,
                "s_max": self.profile.s_max, "tol": self.profile.tol}


def _sample_time1(u1, x, y):
    if isinstance(u1, ScalarField):
        try:
            return u1.sample(x, y)
        except DomainError as exc:
            raise ExtrapolationError(str(exc)) from exc
    return np.asarray(u1(x, y), dtype=float)


@dataclass(frozen=True)
class Translating:
    """Translating soliton ``u(x, y, t) = t * u1(x - log t, y)``."""

    time1: object

    def evaluate(self, x, y, t):
        return eval_selfsimilar(self, (x, y), t)

    def to_dict(self):
        return {"kind": "translating"}


@dataclass(frozen=True)
class DilatingRotating:
    """Dilating/rotating soliton ``g(t) = t * psi_lambda^* g(1)``, ``lambda = t^(-1/alpha)``.

    In the Cartesian chart ``psi_lambda(r, theta) = (lambda r, theta -
    beta log lambda)`` and the conformal factor picks up ``lambda^2``; in the
    log-polar chart ``(s, theta) = (log r, theta)`` the map is a translation.
    """

    alpha: float
    beta: float
    time1: object
    chart: str = "cartesian"

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")

    def evaluate(self, x, y, t):
        return eval_selfsimilar(self, (x, y), t)

    def to_dict(self):
        return {"kind": "dilating_rotating", "alpha": self.alpha, "beta": self.beta,
                "chart": self.chart}


def eval_selfsimilar(e, p, t):
    """Evaluate a self-similar solution from its time-1 field."""
    _check_time(t)
    x = np.asarray(p[0], dtype=float)
    y = np.asarray(p[1], dtype=float)
    if isinstance(e, Translating):
        return t * _sample_time1(e.time1, x - math.log(t), y)
    if isinstance(e, DilatingRotating):
        lam = t ** (-1.0 / e.alpha)
        rot = -e.beta * math.log(lam)
        if e.chart == "logpolar":
            return t * _sample_time1(e.time1, x + math.log(lam), y + rot)
        c, s = math.cos(rot), math.sin(rot)
        xr = lam * (c * x - s * y)
        yr = lam * (s * x + c * y)
        return t * lam * lam * _sample_time1(e.time1, xr, yr)
    raise DomainError(f"{type(e).__name__} is not a self-similar solution")


@lru_cache(maxsize=4)
def cached_profile(s_max: float = 40.0, tol: float = 1e-8) -> ProfileF:
    """Shooting is slow (tens of seconds); share one profile per process."""
    return solve_halfplane_profile(s_max=s_max, tol=tol)


def solution_from_dict(d: dict):
    """Rebuild a closed-form or profile solution from its ``to_dict`` form."""
    kind = d.get("kind")
    if kind == "constant":
        return Constant(float(d.get("value", 1.0)))
    if kind == "line_soliton":
        return LineSoliton(float(d.get("scale", 1.0)), float(d.get("x0", 0.0)))
    if kind == "big_bang_disc":
        return BigBangDisc(float(d.get("radius", 1.0)), tuple(map(float, d.get("center", (0.0, 0.0)))))
    if kind == "hyperbolic_complement":
        return HyperbolicComplement(float(d.get("radius", 1.0)))
    if kind == "halfplane_profile":
        prof = cached_profile(float(d.get("s_max", 40.0)), float(d.get("tol", 1e-8)))
        return HalfPlaneProfile(prof, d.get("axis", "y"), float(d.get("offset", 0.0)))
    raise ConfigurationError(f"solution kind {kind!r} cannot be built from a dict")
