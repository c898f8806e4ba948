"""Numerical checks of the localization and monotonicity estimates.

Each check compares a measured left-hand side against the closed-form
right-hand side of one inequality and reports the margin ``rhs - lhs``
at every snapshot. Margins are allowed to dip to ``-MARGIN_TOL_REL``
relative to the datum's L^2 size before a violation is declared: the
inequalities themselves are exact, the tolerance only absorbs quadrature
and splitting noise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import Field, Grid, grad_norm_l2, norm_hs, norm_lp
from .dynamics import NLSParams, SolveConfig, Termination, Trajectory, evolve_harmonic, mass
from .regions import (
    Ball,
    Complement,
    Dilation,
    HalfSpace,
    Region,
    cutoff_build,
    mask_points,
    region_distance,
)

__all__ = [
    "MARGIN_TOL_REL",
    "EstimateViolation",
    "DisturbanceReport",
    "VirialReport",
    "InteractionReport",
    "LensReport",
    "LpCheck",
    "check_disturbance_linear",
    "check_disturbance_nls",
    "check_disturbance_boosted",
    "check_disturbance_lp",
    "cone_mass",
    "virial_track",
    "interaction_norm",
    "scattering_localization",
    "gn_theta",
    "calibrate_gn_constant",
]

logger = logging.getLogger(__name__)

MARGIN_TOL_REL = 1e-6
SUPPORT_TOL_REL = 1e-10


class EstimateViolation(Exception):
    """An asserted inequality failed beyond the noise tolerance."""


@dataclass
class DisturbanceReport:
    """Per-snapshot margins of one disturbance inequality."""

    tag: str  # linear_supported | linear_general | nls_supported | nls_general | boosted
    mode: str
    dist: float
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tol: float
    b: Optional[float] = None

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def worst_margin(self) -> float:
        return float(self.margin.min())

    @property
    def ok(self) -> bool:
        return self.worst_margin >= -self.tol

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(t), float(self.lhs[i]), float(self.rhs[i]), float(self.margin[i]),
                   self.tag, float(self.tol))

    header = ("time", "lhs", "rhs", "margin", "tag", "tol")


@dataclass
class VirialReport:
    """Variance track, its one-sided slope at zero, and second differences."""

    times: np.ndarray
    variance: np.ndarray
    vdot0: float
    second_difference: np.ndarray  # aligned with times[1:-1]
    bound_16e: float
    asserted: bool
    e0: float
    t_star: Optional[float]
    t_detect: Optional[float]

    def parabola(self, t: np.ndarray) -> np.ndarray:
        return self.variance[0] + self.vdot0 * t + 8.0 * self.e0 * t * t

    @property
    def worst_excess(self) -> float:
        """Largest amount by which the second difference beats the bound."""
        return float((self.second_difference - self.bound_16e).max())

    def rows(self):
        par = self.parabola(self.times)
        sd = np.full(len(self.times), np.nan)
        sd[1:-1] = self.second_difference
        for i, t in enumerate(self.times):
            yield (float(t), float(self.variance[i]), float(par[i]), float(sd[i]),
                   float(self.bound_16e),
                   float(self.t_star) if self.t_star is not None else float("nan"),
                   float(self.t_detect) if self.t_detect is not None else float("nan"))

    header = ("time", "variance", "parabola", "second_difference", "bound_16e", "t_star", "t_detect")


@dataclass
class InteractionReport:
    """Mixed-term norms, global and per half-line, plus the time aggregate."""

    D: Optional[float]
    r: float
    gamma_exp: float
    times: np.ndarray
    global_norm: np.ndarray
    upper_norm: np.ndarray
    lower_norm: np.ndarray
    aggregate: float

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(self.D) if self.D is not None else float("nan"), float(t),
                   float(self.global_norm[i]), float(self.upper_norm[i]),
                   float(self.lower_norm[i]), float(self.aggregate))

    header = ("D", "time", "global_norm", "upper_norm", "lower_norm", "aggregate")


@dataclass
class LensReport:
    """Frequency localization of the scattering state after the confined run."""

    lhs: float
    rhs: float
    dist: float
    sigma_norm: float
    tail: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def rows(self):
        yield (float(self.lhs), float(self.rhs), float(self.margin), float(self.dist),
               float(self.sigma_norm), float(self.tail))

    header = ("lhs", "rhs", "margin", "dist", "sigma_norm", "tail")


@dataclass
class LpCheck:
    """One-time L^p localization via the interpolation chain."""

    t: float
    lhs: float
    rhs: float
    theta: float
    c_gn: float
    l2_bound: float
    grad_cut: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else np.inf

    def rows(self):
        yield (float(self.t), float(self.lhs), float(self.rhs), float(self.ratio),
               float(self.theta), float(self.c_gn))

    header = ("time", "lhs", "rhs", "ratio", "theta", "c_gn")


# ---------------------------------------------------------------------------
# helpers


def _support_tail(u0: Field, a: Region) -> float:
    return norm_lp(u0, 2, Complement(a))


def _require_supported(u0: Field, a: Region, who: str):
    tail = _support_tail(u0, a)
    total = norm_lp(u0, 2)
    if tail > SUPPORT_TOL_REL * total:
        raise ValueError(
            f"{who}: datum carries relative mass {tail / total:.3e} outside the source region; "
            "use mode='general', which adds the tail term instead of requiring support"
        )


def _require_stride_one(traj: Trajectory, who: str):
    if traj.snapshot_stride != 1:
        raise ValueError(
            f"{who}: estimate mode needs snapshot_stride = 1 so the running gradient sup "
            f"is honest, got stride {traj.snapshot_stride}"
        )


def _lhs_over_region(traj: Trajectory, b: Region) -> np.ndarray:
    return np.array([norm_lp(s, 2, b) for s in traj.snapshots])


def _momentum(u: Field) -> np.ndarray:
    """Conserved momentum ``Im int conj(u) grad u`` per axis."""
    from .core import gradient

    comps = gradient(u)
    w = u.grid.cell_volume
    return np.array([float(np.imag(np.sum(np.conj(u.values) * g.values)) * w) for g in comps])


def _second_moment(u: Field) -> float:
    """``||x u||_2^2`` on the lattice."""
    x2 = np.zeros(u.grid.shape)
    for c in u.grid.coords():
        x2 = x2 + np.asarray(c) ** 2
    return u.grid.cell_volume * float(np.sum(x2 * np.abs(u.values) ** 2))


# ---------------------------------------------------------------------------
# disturbance checks


def check_disturbance_linear(u0: Field, a: Region, b: Region, traj: Trajectory,
                             mode: str = "supported") -> DisturbanceReport:
    """Free-flow mass leakage into ``B``.

    supported: ``||u(t)||_{L2(B)} <= 2 ||grad u0||_2 t / dist(A, B)`` for data
    carried by ``A``; general drops the support requirement and adds the
    initial tail ``||u0||_{L2(complement A)}`` to the right-hand side.
    """
    if mode not in ("supported", "general"):
        raise ValueError(f"mode must be 'supported' or 'general', got {mode!r}")
    if not traj.is_linear:
        raise ValueError("check_disturbance_linear expects a free-flow trajectory (lam = 0)")
    dist = region_distance(a, b)
    if dist <= 0:
        raise ValueError("regions must be separated for a disturbance bound")
    if mode == "supported":
        _require_supported(u0, a, "check_disturbance_linear")
        tail = 0.0
    else:
        tail = _support_tail(u0, a)
    grad0 = grad_norm_l2(u0)
    lhs = _lhs_over_region(traj, b)
    rhs = 2.0 * grad0 * traj.times / dist + tail
    return DisturbanceReport(
        tag=f"linear_{mode}", mode=mode, dist=dist, times=traj.times, lhs=lhs, rhs=rhs,
        tol=MARGIN_TOL_REL * norm_lp(u0, 2),
    )


def check_disturbance_nls(u0: Field, a: Region, b: Region, traj: Trajectory,
                          mode: str = "supported") -> DisturbanceReport:
    """Nonlinear version: the gradient factor becomes the running sup."""
    if mode not in ("supported", "general"):
        raise ValueError(f"mode must be 'supported' or 'general', got {mode!r}")
    _require_stride_one(traj, "check_disturbance_nls")
    dist = region_distance(a, b)
    if dist <= 0:
        raise ValueError("regions must be separated for a disturbance bound")
    if mode == "supported":
        _require_supported(u0, a, "check_disturbance_nls")
        tail = 0.0
    else:
        tail = _support_tail(u0, a)
    lhs = _lhs_over_region(traj, b)
    rhs = 2.0 * traj.running_sup_grad * traj.times / dist + tail
    return DisturbanceReport(
        tag=f"nls_{mode}", mode=mode, dist=dist, times=traj.times, lhs=lhs, rhs=rhs,
        tol=MARGIN_TOL_REL * norm_lp(u0, 2),
    )


def check_disturbance_boosted(u0: Field, a: Region, b: Region, traj: Trajectory,
                              boost: float) -> DisturbanceReport:
    """Family of bounds from boosted frames chasing a receding half-space.

    ``||u(t)||_{L2(B)} <= t / (dist + b t) * (4 sup_s ||grad u(s)||^2
    + b^2 ||u0||_2^2)^(1/2)`` for every ``b >= 0``; at ``b = 0`` this is
    bit-identical to the supported bound. Valid for momentum-free data
    (the boost's gradient cross term vanishes and stays zero under the
    flow), so complex data with net momentum are rejected.
    """
    if boost < 0:
        raise ValueError(f"boost must be >= 0, got {boost}")
    if not isinstance(b, HalfSpace):
        raise ValueError("boosted bound needs a half-space target receding along an axis")
    _require_stride_one(traj, "check_disturbance_boosted")
    _require_supported(u0, a, "check_disturbance_boosted")
    dist = region_distance(a, b)
    if dist <= 0:
        raise ValueError("regions must be separated for a disturbance bound")
    mom = _momentum(u0)
    scale = norm_lp(u0, 2) * grad_norm_l2(u0)
    if np.abs(mom).max() > 1e-8 * (1.0 + scale):
        raise ValueError(
            f"boosted bound assumes momentum-free data, measured momentum {mom}"
        )
    m0 = mass(u0)
    lhs = _lhs_over_region(traj, b)
    sup = traj.running_sup_grad
    rhs = traj.times / (dist + boost * traj.times) * np.sqrt(4.0 * sup**2 + boost**2 * m0)
    return DisturbanceReport(
        tag="boosted", mode="supported", dist=dist, times=traj.times, lhs=lhs, rhs=rhs,
        tol=MARGIN_TOL_REL * norm_lp(u0, 2), b=boost,
    )


def check_disturbance_lp(u0: Field, a: Region, b: Region, traj: Trajectory, t: float,
                         c_gn: Optional[float] = None) -> LpCheck:
    """``L^{sigma+2}(B)`` bound through the cutoff-interpolation chain.

    ``||u(t)||_{L^{sigma+2}(B)} <= C_GN * bnd^(1-theta) * ||grad(phi u)||^theta``
    with ``theta = d sigma / (2 (sigma + 2))``, ``bnd`` the general-mode L^2
    disturbance bound, ``phi`` the cutoff vanishing on ``A``, and ``C_GN``
    the interpolation constant calibrated on the gaussian family.
    """
    params = traj.params
    if params is None:
        raise ValueError("trajectory carries no flow parameters")
    _require_stride_one(traj, "check_disturbance_lp")
    theta = gn_theta(u0.grid.d, params.sigma)
    dist = region_distance(a, b)
    if dist <= 0:
        raise ValueError("regions must be separated for a disturbance bound")
    idx = int(np.argmin(np.abs(traj.times - t)))
    if abs(traj.times[idx] - t) > 0.5 * traj.dt * traj.snapshot_stride + 1e-12:
        raise ValueError(f"no snapshot near t = {t}")
    t = float(traj.times[idx])
    u_t = traj.snapshots[idx]
    if c_gn is None:
        c_gn = calibrate_gn_constant(u0.grid, params.sigma)
    phi = cutoff_build(a, b, u0.grid)
    cut = Field(u0.grid, phi.values * u_t.values)
    grad_cut = grad_norm_l2(cut)
    bnd = 2.0 * traj.running_sup_grad[idx] * t / dist + _support_tail(u0, a)
    lhs = norm_lp(u_t, params.sigma + 2.0, b)
    rhs = c_gn * bnd ** (1.0 - theta) * grad_cut**theta
    return LpCheck(t=t, lhs=lhs, rhs=rhs, theta=theta, c_gn=c_gn, l2_bound=bnd, grad_cut=grad_cut)


def cone_mass(traj: Trajectory, a: Region, gamma: float):
    """Mass outside the ``gamma t``-dilated source along a free-flow run.

    Returns ``(times, values, bound)`` with ``bound = 2 ||grad u0||_2 / gamma``
    and raises :class:`EstimateViolation` if any value beats the bound beyond
    the noise tolerance. Dilations reaching the box edge only warn: the
    outside set is then empty on the lattice and the values sit at zero.
    """
    if gamma <= 0:
        raise ValueError(f"speed gamma must be positive, got {gamma}")
    if not traj.is_linear:
        raise ValueError("cone_mass expects a free-flow trajectory (lam = 0)")
    u0 = traj.snapshots[0]
    grad0 = grad_norm_l2(u0)
    bound = 2.0 * grad0 / gamma
    values = np.empty(len(traj.times))
    box = traj.grid.L
    for i, t in enumerate(traj.times):
        radius = gamma * float(t)
        if radius >= box:
            logger.warning("cone dilation radius %.3g reaches the box half-width %.3g", radius, box)
        outside = Complement(Dilation(a, radius)) if radius > 0 else Complement(a)
        values[i] = norm_lp(traj.snapshots[i], 2, outside)
    tol = MARGIN_TOL_REL * norm_lp(u0, 2)
    if np.any(values > bound + tol):
        worst = float((values - bound).max())
        raise EstimateViolation(f"cone mass exceeds 2||grad u0||/gamma by {worst:.3e}")
    return traj.times, values, bound


# ---------------------------------------------------------------------------
# virial


def virial_track(traj: Trajectory, params: Optional[NLSParams] = None) -> VirialReport:
    """Variance ``V(t) = ||x u||_2^2`` with second differences against 16 E.

    The comparison is only asserted at or above the critical power and on
    runs that reached the horizon: once a guard has tripped, the trailing
    snapshots are already outside the resolvable regime and their stencils
    mean nothing. The report still carries the data either way. ``vdot0``
    uses the one-sided second-order stencil so no pre-zero state is needed;
    for ``E < 0`` the parabola's positive root ``t_star`` bounds the latest
    admissible collapse time.
    """
    params = params if params is not None else traj.params
    if params is None:
        raise ValueError("virial_track needs flow parameters")
    if len(traj.times) < 3:
        raise ValueError("virial tracking needs at least three snapshots")
    steps = np.diff(traj.times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("virial stencils need uniformly spaced snapshots")
    dt = float(steps[0])
    v = np.array([_second_moment(s) for s in traj.snapshots])
    vdot0 = float((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt))
    sd = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dt**2
    e0 = float(traj.energy_history[0])
    critical_or_above = traj.kind == "nls" and params.sigma >= 4.0 / traj.grid.d
    asserted = critical_or_above and traj.reached_horizon
    t_star = None
    if critical_or_above and e0 < 0:
        # positive root of V0 + vdot0 t + 8 E t^2
        disc = vdot0**2 - 32.0 * e0 * v[0]
        t_star = float((-vdot0 - np.sqrt(disc)) / (16.0 * e0))
    t_detect = float(traj.times[-1]) if traj.terminated_by is Termination.BLOWUP_DETECTED else None
    return VirialReport(
        times=traj.times, variance=v, vdot0=vdot0, second_difference=sd,
        bound_16e=16.0 * e0, asserted=asserted, e0=e0, t_star=t_star, t_detect=t_detect,
    )


# ---------------------------------------------------------------------------
# interaction


def interaction_norm(u_traj: Trajectory, v_traj: Trajectory, r: Optional[float] = None,
                     window=None, D: Optional[float] = None) -> InteractionReport:
    """Norms of the mixed nonlinear term ``N(u, v)`` along two runs.

    ``N(u, v) = |u+v|^sigma (u+v) - |u|^sigma u - |v|^sigma v`` snapshot by
    snapshot; reported in ``L^r`` globally and on the half-spaces on either
    side of the splitting hyperplane, plus the ``L^{gamma'}`` trapezoid
    aggregate in time with ``gamma' = (sigma+2)/(sigma+1)``.
    """
    if u_traj.grid != v_traj.grid:
        raise ValueError("interaction_norm needs both runs on one grid")
    if len(u_traj.times) != len(v_traj.times) or not np.allclose(
        u_traj.times, v_traj.times, rtol=0, atol=1e-12
    ):
        raise ValueError("interaction_norm needs matching snapshot times")
    pu, pv = u_traj.params, v_traj.params
    if pu is None or pv is None or pu.sigma != pv.sigma:
        raise ValueError("interaction_norm needs a common nonlinearity power")
    sigma = pu.sigma
    gamma_exp = (sigma + 2.0) / (sigma + 1.0)
    if r is None:
        r = gamma_exp
    times = u_traj.times
    keep = np.ones(len(times), dtype=bool)
    if window is not None:
        t0, t1 = window
        keep = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
        if not keep.any():
            raise ValueError(f"window {window} contains no snapshots")
    grid = u_traj.grid
    upper = HalfSpace(0, "above", 0.0)
    lower = HalfSpace(0, "below", 0.0)

    def nl(z):
        return np.abs(z) ** sigma * z

    g_norm, up_norm, lo_norm = [], [], []
    for i in np.nonzero(keep)[0]:
        un, vn = u_traj.snapshots[i].values, v_traj.snapshots[i].values
        mixed = Field(grid, nl(un + vn) - nl(un) - nl(vn))
        g_norm.append(norm_lp(mixed, r))
        up_norm.append(norm_lp(mixed, r, upper))
        lo_norm.append(norm_lp(mixed, r, lower))
    tt = times[keep]
    g_arr = np.asarray(g_norm)
    agg = float(np.trapezoid(g_arr**gamma_exp, tt) ** (1.0 / gamma_exp)) if len(tt) > 1 else 0.0
    return InteractionReport(
        D=D, r=float(r), gamma_exp=gamma_exp, times=tt, global_norm=g_arr,
        upper_norm=np.asarray(up_norm), lower_norm=np.asarray(lo_norm), aggregate=agg,
    )


# ---------------------------------------------------------------------------
# scattering localization through the confined flow


def scattering_localization(u0: Field, a: Region, b_freq: Region, params: NLSParams,
                            cfg: Optional[SolveConfig] = None) -> LensReport:
    """Frequency localization of the scattering state.

    A quarter period of the confined flow turns the infinite-time free
    profile into a concrete field whose spectrum is read on the wavenumber
    lattice; its mass over ``b_freq`` is bounded by
    ``pi ||u0||_Sigma / dist(A, B) + ||u0||_{L2(complement A)}``.
    Only the non-focusing critical flow scatters this way, so ``lam > 0``
    is rejected.
    """
    if params.lam > 0:
        raise ValueError("scattering localization holds for the non-focusing flow only (lam <= 0)")
    horizon = 0.5 * np.pi
    if cfg is None:
        cfg = SolveConfig(dt=horizon / 1600, T=horizon, snapshot_stride=100)
    else:
        cfg = SolveConfig(
            dt=cfg.dt, T=horizon, snapshot_stride=cfg.snapshot_stride,
            gradient_blowup_factor=cfg.gradient_blowup_factor,
            outer_shell_mass_tol=cfg.outer_shell_mass_tol,
        )
    traj = evolve_harmonic(u0, params, cfg)
    if not traj.reached_horizon:
        raise EstimateViolation(
            f"confined run stopped early ({traj.terminated_by.value}); no scattering state"
        )
    final = traj.snapshots[-1]
    uhat = u0.grid.cell_volume * np.fft.fftn(final.values)
    kmask = mask_points(b_freq, u0.grid.k_axes())
    lhs = float(np.sqrt(np.sum(np.abs(uhat[kmask]) ** 2) / u0.grid.box_volume))
    dist = region_distance(a, b_freq)
    if dist <= 0:
        raise ValueError("source and frequency regions must be separated")
    sigma_norm = float(np.sqrt(norm_hs(u0, 1.0) ** 2 + _second_moment(u0)))
    tail = _support_tail(u0, a)
    rhs = np.pi * sigma_norm / dist + tail
    return LensReport(lhs=lhs, rhs=rhs, dist=dist, sigma_norm=sigma_norm, tail=tail)


# ---------------------------------------------------------------------------
# interpolation constant


def gn_theta(d: int, sigma: float) -> float:
    """Interpolation exponent ``d sigma / (2 (sigma + 2))``; must be in (0, 1)."""
    theta = d * sigma / (2.0 * (sigma + 2.0))
    if not 0.0 < theta < 1.0:
        raise ValueError(f"interpolation exponent {theta} outside (0, 1) for d={d}, sigma={sigma}")
    return theta


@lru_cache(maxsize=32)
def _calibrate_cached(d: int, L: float, N: int, sigma: float) -> float:
    from .data import gaussian

    grid = Grid(d=d, L=L, N=N)
    theta = gn_theta(d, sigma)
    p = sigma + 2.0
    best = 0.0
    for w in np.geomspace(0.3, 3.0, 13):
        z = gaussian(grid, width=float(w))
        ratio = norm_lp(z, p) / (norm_lp(z, 2) ** (1.0 - theta) * grad_norm_l2(z) ** theta)
        best = max(best, float(ratio))
    return best


def calibrate_gn_constant(grid: Grid, sigma: float) -> float:
    """Best interpolation ratio over the gaussian width family on this grid."""
    return _calibrate_cached(grid.d, grid.L, grid.N, float(sigma))
