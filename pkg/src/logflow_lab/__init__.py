"""Numerical laboratory for the logarithmic fast diffusion equation ``u_t = Delta log u``."""

from __future__ import annotations

__version__ = "0.1.0"
