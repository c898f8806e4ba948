"""Periodic spectral grid, complex fields, and discrete norms.

Conventions used throughout the package:

* the box is ``[-L, L)^d`` sampled on ``N`` nodes per axis, ``h = 2L/N``;
* wavenumbers are ``k_j = (pi/L) j`` for ``j = -N/2, ..., N/2 - 1``;
* the discrete Fourier transform carries the quadrature weight,
  ``uhat_k = h^d * sum_x u(x) exp(-i k.x)``, so Plancherel reads
  ``||u||_2^2 = sum_k |uhat_k|^2 / (2L)^d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SobolevOrder",
    "make_grid",
    "field_from_array",
    "zero_field",
    "fft_forward",
    "fft_inverse",
    "norm_lp",
    "gradient",
    "grad_norm_l2",
    "norm_hs",
    "translate",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L, L)^d`` with ``N`` nodes per axis.

    Build through :func:`make_grid`, which validates the arguments.
    Derived arrays are attached once in ``__post_init__``.
    """

    d: int
    L: float
    N: int

    def __post_init__(self):
        h = 2.0 * self.L / self.N
        x1 = -self.L + h * np.arange(self.N)
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.N, d=h)  # = (pi/L) * j
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "k1", k1)

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def box_volume(self) -> float:
        return (2.0 * self.L) ** self.d

    def coords(self) -> tuple:
        """Node coordinates as ``d`` broadcastable arrays (ij indexing)."""
        return tuple(np.meshgrid(*([self.x1] * self.d), indexing="ij", sparse=True))

    def k_axes(self) -> tuple:
        """Wavenumber coordinates as ``d`` broadcastable arrays."""
        return tuple(np.meshgrid(*([self.k1] * self.d), indexing="ij", sparse=True))

    def k_squared(self) -> np.ndarray:
        """Dense ``|k|^2`` multiplier with the field's shape."""
        ks = self.k_axes()
        out = np.zeros(self.shape)
        for a in ks:
            out = out + a**2
        return out


def make_grid(d: int, L: float, N: int) -> Grid:
    """Validated grid constructor.

    ``d`` must be 1 or 2, ``L`` positive, and ``N`` a power of two with
    ``N >= 16`` so the split radix transforms stay fast and the Nyquist
    bookkeeping below is exact.
    """
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")
    if not (isinstance(N, (int, np.integer)) and N >= 16 and (N & (N - 1)) == 0):
        raise ValueError(f"N must be a power of two >= 16, got {N}")
    if not (L > 0 and np.isfinite(L)):
        raise ValueError(f"box half-width must be positive and finite, got {L}")
    return Grid(d=int(d), L=float(L), N=int(N))


@dataclass(frozen=True)
class Field:
    """Complex nodal values bound to their grid.

    Values are stored row-major with shape ``(N,)*d`` and must be finite;
    the solver drops non-finite states before they are ever wrapped here.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass(frozen=True)
class SobolevOrder:
    """Order ``s`` of the H^s scale; shipped experiments stay within [0, 1]."""

    s: float

    def __post_init__(self):
        if not (np.isfinite(self.s) and self.s >= 0.0):
            raise ValueError(f"Sobolev order must be finite and >= 0, got {self.s}")


def critical_order(d: int, sigma: float) -> SobolevOrder:
    """Scaling-critical order ``d/2 - 2/sigma``, clamped below at zero."""
    return SobolevOrder(max(0.0, 0.5 * d - 2.0 / sigma))


def field_from_array(grid: Grid, values: np.ndarray) -> Field:
    return Field(grid, np.asarray(values, dtype=np.complex128))


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.shape, dtype=np.complex128))


def fft_forward(u: Field) -> np.ndarray:
    """Forward transform with quadrature weight: ``h^d * fftn(values)``."""
    return u.grid.cell_volume * np.fft.fftn(u.values)


def fft_inverse(grid: Grid, uhat: np.ndarray) -> Field:
    return Field(grid, np.fft.ifftn(uhat) / grid.cell_volume)


def _region_mask(grid: Grid, region) -> np.ndarray:
    # local import: regions build on top of the grid, not the other way round
    from .regions import mask_points

    return mask_points(region, grid.coords())


def norm_lp(u: Field, p: float, region=None) -> float:
    """Discrete L^p norm, optionally restricted to a region.

    ``(h^d sum_{x in R} |u|^p)^(1/p)`` for finite ``p``; the nodal max for
    ``p = inf``. An empty region gives 0 rather than an error so that sweeps
    over shrinking regions degrade gracefully.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(u.values)
    if region is not None:
        mask = _region_mask(u.grid, region)
        if not mask.any():
            return 0.0
        a = a[mask]
    if np.isinf(p):
        return float(a.max())
    return float((u.grid.cell_volume * np.sum(a**p)) ** (1.0 / p))


def gradient(u: Field) -> tuple:
    """Spectral gradient, one Field per axis (multiplier ``i k_a``)."""
    uhat = np.fft.fftn(u.values)
    ks = u.grid.k_axes()
    out = []
    for a in range(u.grid.d):
        out.append(Field(u.grid, np.fft.ifftn(1j * ks[a] * uhat)))
    return tuple(out)


def grad_norm_l2(u: Field) -> float:
    """``||grad u||_2`` straight from the spectrum (no inverse transforms)."""
    uhat = fft_forward(u)
    return float(np.sqrt(np.sum(u.grid.k_squared() * np.abs(uhat) ** 2) / u.grid.box_volume))


def norm_hs(u: Field, s) -> float:
    """Sobolev norm ``(sum_k (1+|k|^2)^s |uhat_k|^2 / (2L)^d)^(1/2)``.

    At ``s = 0`` this reproduces ``norm_lp(u, 2)`` exactly (Plancherel with
    the ``(2L)^-d`` weight); the multiplier is the Japanese bracket squared.
    """
    if isinstance(s, SobolevOrder):
        s = s.s
    if not (np.isfinite(s) and s >= 0.0):
        raise ValueError(f"Sobolev order must be finite and >= 0, got {s}")
    uhat = fft_forward(u)
    mult = (1.0 + u.grid.k_squared()) ** s
    return float(np.sqrt(np.sum(mult * np.abs(uhat) ** 2) / u.grid.box_volume))


def translate(u: Field, shift) -> Field:
    """Periodic translation ``u(. - shift)`` for grid-multiple shifts.

    Implemented with ``np.roll`` so translated evolutions match shifted
    ones to the bit; non-multiples are rejected instead of interpolated.
    """
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    if shift.shape != (u.grid.d,):
        raise ValueError(f"shift must have {u.grid.d} components")
    steps = []
    for s in shift:
        n = s / u.grid.h
        ni = int(round(n))
        if abs(n - ni) > 1e-9:
            raise ValueError(f"shift {s} is not a grid multiple (h = {u.grid.h})")
        steps.append(ni)
    return Field(u.grid, np.roll(u.values, steps, axis=tuple(range(u.grid.d))))
