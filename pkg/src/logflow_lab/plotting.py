"""Figures for experiment runs (rendered off-screen to PNG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .exactsol import cached_profile  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "lines.linewidth": 1.4,
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamps in the PNG metadata
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_slices(traj, path: Path, title: str = "") -> Path:
    """``u(x, y0, t)`` along the first grid row for every snapshot."""
    g = traj.grid
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in traj:
            ax.plot(g.x, s.u.values[:, 0], label=f"t = {s.t:.4g}")
        ax.set_yscale("log")
        ax.set_xlabel("s = log r" if g.topology == "annulus" else "x")
        ax.set_ylabel("w" if g.topology == "annulus" else "u")
        ax.set_title(title)
        ax.legend(fontsize=8)
        return _save(fig, path)


def plot_field(state, path: Path, title: str = "") -> Path:
    """Colour map of ``log u`` on the grid."""
    g = state.grid
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        X, Y = g.mesh()
        im = ax.pcolormesh(X, Y, np.log(state.u.values), shading="auto", cmap="viridis")
        fig.colorbar(im, ax=ax, label="log u")
        ax.set_aspect("auto" if g.topology in ("strip", "annulus") else "equal")
        ax.set_title(title or f"t = {state.t:.4g}")
        return _save(fig, path)


def plot_ladder(values, h, path: Path, metric: str) -> Path:
    """Metric against grid spacing on log-log axes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.loglog(h, values, "o-")
        ax.set_xlabel("h")
        ax.set_ylabel(metric)
        ax.invert_xaxis()
        return _save(fig, path)


def plot_profile(path: Path) -> Path:
    """``F(s)`` and ``F s^2/2`` for the half-plane profile."""
    prof = cached_profile()
    with plt.rc_context(STYLE):
        fig, (a, b) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        a.loglog(prof.s, prof.F)
        a.set_xlabel("s")
        a.set_ylabel("F")
        b.semilogx(prof.s, prof.F * prof.s ** 2 / 2)
        b.axhline(1.0, color="k", lw=0.8, ls=":")
        b.set_xlabel("s")
        b.set_ylabel("F s^2 / 2")
        fig.tight_layout()
        return _save(fig, path)


def experiment_figures(cfg, rungs, out: Path) -> list[Path]:
    """Standard figures: finest-rung slices and field, ladder metrics, profile."""
    paths = []
    done = [r for r in rungs if r.traj is not None and len(r.traj)]
    if done:
        finest = done[-1]
        paths.append(plot_slices(finest.traj, out / "slices.png", cfg.name))
        paths.append(plot_field(finest.traj[-1], out / "field.png", cfg.name))
    h = [(r.grid["x1"] - r.grid["x0"]) / (r.grid["nx"] - 1) for r in rungs]
    for c in cfg.ladder_checks:
        metric = c.get("params", {}).get("metric")
        vals = [r.metrics.get(metric) for r in rungs]
        if metric and all(isinstance(v, (int, float)) and v > 0 for v in vals):
            paths.append(plot_ladder(vals, h, out / f"ladder_{metric}.png", metric))
    if any(c["name"] == "profile" for c in cfg.checks):
        paths.append(plot_profile(out / "profile.png"))
    return paths
