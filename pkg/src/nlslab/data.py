"""Initial-data presets shared by configs, tests, and experiments."""

from __future__ import annotations

import numpy as np

from .core import Field, Grid
from .dynamics import galilean_boost

__all__ = ["gaussian", "smooth_bump", "sech_soliton"]


def gaussian(grid: Grid, amp: float = 1.0, width: float = 1.0, center=None, boost: float = 0.0) -> Field:
    """``amp * exp(-|x - c|^2 / (2 width^2))``, optionally boosted along e1."""
    if not width > 0:
        raise ValueError(f"gaussian width must be positive, got {width}")
    c = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.d,):
        raise ValueError(f"center must have {grid.d} components")
    r2 = np.zeros(grid.shape)
    for ci, xi in zip(c, grid.coords()):
        r2 = r2 + (np.asarray(xi) - ci) ** 2
    u = Field(grid, amp * np.exp(-r2 / (2.0 * width**2)))
    if boost != 0.0:
        e1 = np.zeros(grid.d)
        e1[0] = 1.0
        u = galilean_boost(u, boost, e1)
    return u


def smooth_bump(grid: Grid, amp: float = 1.0, radius: float = 1.0, center=None) -> Field:
    """Compactly supported bump ``amp * exp(1 - 1/(1 - (r/radius)^2))``.

    Vanishes identically outside the ball, so "supported" preconditions of
    the localization checks hold exactly on the lattice.
    """
    if not radius > 0:
        raise ValueError(f"bump radius must be positive, got {radius}")
    c = np.zeros(grid.d) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    if c.shape != (grid.d,):
        raise ValueError(f"center must have {grid.d} components")
    r2 = np.zeros(grid.shape)
    for ci, xi in zip(c, grid.coords()):
        r2 = r2 + (np.asarray(xi) - ci) ** 2
    q = r2 / radius**2
    vals = np.zeros(grid.shape)
    inside = q < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        vals[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - q[inside]))
    return Field(grid, vals)


def sech_soliton(grid: Grid, t: float = 0.0) -> Field:
    """``exp(it) sqrt(2) sech(x)``: stationary profile of the 1d cubic
    focusing flow (lam = 1, sigma = 2), used as a conservation benchmark."""
    if grid.d != 1:
        raise ValueError("the sech profile is one-dimensional")
    x = grid.x1
    return Field(grid, np.exp(1j * t) * np.sqrt(2.0) / np.cosh(x))
