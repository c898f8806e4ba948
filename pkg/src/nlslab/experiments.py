"""Concatenation experiments: how fast two far-apart humps decouple.

The central objects are difference tracks ``w(t) = combined(t) - u(t) - v(t)``
between one run started from superposed humps and the two runs started from
each hump alone. Their size is measured by a discrete space-time proxy norm
and swept over the separation ``D``.

Single-hump runs are never repeated per separation: the flow commutes with
lattice translations exactly (spectral shifts are rolls), so both side runs
are rolls of one centered base run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Field, Grid, make_grid, norm_hs, norm_lp, translate, zero_field
from .data import gaussian, smooth_bump
from .dynamics import (
    CoupledParams,
    NLSParams,
    SolveConfig,
    Trajectory,
    evolve,
    evolve_coupled,
)

__all__ = [
    "discrete_strichartz_norm",
    "ConcatScenario",
    "ConcatReport",
    "SweepResult",
    "GDProxyResult",
    "base_run",
    "concat_run",
    "d_sweep",
    "gd_proxy",
    "build_spread_data",
    "coupled_concat_run",
]


def discrete_strichartz_norm(times, fields, sigma: float, order: int = 0,
                             window=None) -> float:
    """Space-time proxy ``sup_t ||f||_{H^order} + (int ||f||_{s+2}^{s+2} dt)^{1/(s+2)}``.

    order 0 uses plain L^2 for the sup and L^{sigma+2} of the field under the
    integral; order 1 upgrades the sup to H^1 and adds the gradient's
    L^{sigma+2} mass to the integrand. The integral is a trapezoid over the
    snapshot times, so two samplings of one continuous track agree at O(dt^2).
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    times = np.asarray(times, dtype=float)
    if len(times) != len(fields):
        raise ValueError("times and fields length mismatch")
    keep = np.ones(len(times), dtype=bool)
    if window is not None:
        t0, t1 = window
        keep = (times >= t0 - 1e-12) & (times <= t1 + 1e-12)
        if not keep.any():
            raise ValueError(f"window {window} contains no snapshots")
    idx = np.nonzero(keep)[0]
    p = sigma + 2.0
    sup = 0.0
    integrand = np.empty(len(idx))
    for j, i in enumerate(idx):
        f = fields[i]
        if order == 0:
            sup = max(sup, norm_lp(f, 2))
            integrand[j] = norm_lp(f, p) ** p
        else:
            from .core import gradient

            sup = max(sup, norm_hs(f, 1.0))
            bulk = norm_lp(f, p) ** p
            for comp in gradient(f):
                bulk += norm_lp(comp, p) ** p
            integrand[j] = bulk
    tt = times[idx]
    quad = float(np.trapezoid(integrand, tt)) if len(tt) > 1 else 0.0
    return float(sup + quad ** (1.0 / p))


@dataclass(frozen=True)
class ConcatScenario:
    """Grid, flow, and hump family for one concatenation study."""

    d: int = 1
    L: float = 128.0
    N: int = 4096
    lam: float = -1.0
    sigma: float = 4.0
    dt: float = 1e-3
    T: float = 5.0
    snapshot_stride: int = 25
    preset: str = "gaussian"  # gaussian | smoothbump
    amp: float = 0.8
    width: float = 1.0
    gradient_blowup_factor: float = 1e3

    def __post_init__(self):
        if self.preset not in ("gaussian", "smoothbump"):
            raise ValueError(f"unknown hump preset {self.preset!r}")
        if not (self.amp > 0 and self.width > 0):
            raise ValueError("hump amplitude and width must be positive")

    def grid(self) -> Grid:
        return make_grid(d=self.d, L=self.L, N=self.N)

    def params(self) -> NLSParams:
        return NLSParams(lam=self.lam, sigma=self.sigma)

    def solve_config(self) -> SolveConfig:
        return SolveConfig(dt=self.dt, T=self.T, snapshot_stride=self.snapshot_stride,
                           gradient_blowup_factor=self.gradient_blowup_factor)

    def hump(self, grid: Grid, center=None) -> Field:
        if self.preset == "gaussian":
            return gaussian(grid, amp=self.amp, width=self.width, center=center)
        return smooth_bump(grid, amp=self.amp, radius=self.width, center=center)

    def check_separation(self, grid: Grid, D: float):
        """A separation is usable when both humps stay inside the safe box."""
        if D <= 0:
            raise ValueError(f"separation must be positive, got {D}")
        half = 0.5 * D / grid.h
        if abs(half - round(half)) > 1e-9:
            raise ValueError(f"separation {D} must put hump centers on lattice nodes")
        reach = 0.5 * D + 4.0 * self.width
        if reach > 0.9 * grid.L:
            raise ValueError(
                f"separation {D} pushes humps into the outer shell "
                f"(reach {reach:.1f} vs safe half-width {0.9 * grid.L:.1f})"
            )

    def check_centers(self, grid: Grid, centers: Sequence[float], D: float):
        """Same constraints for an explicit hump arrangement on the first axis."""
        if len(centers) < 2:
            raise ValueError("an arrangement needs at least two hump centers")
        cs = sorted(float(c) for c in centers)
        gap = min(b - a for a, b in zip(cs, cs[1:]))
        if gap < D - 1e-12:
            raise ValueError(
                f"centers {cs} come as close as {gap:g}, below the separation {D:g}"
            )
        for c in cs:
            steps = c / grid.h
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError(f"hump center {c:g} is off the lattice")
            if abs(c) + 4.0 * self.width > 0.9 * grid.L:
                raise ValueError(
                    f"hump at {c:g} reaches into the outer shell "
                    f"(safe half-width {0.9 * grid.L:.1f})"
                )


@dataclass
class ConcatReport:
    """Difference track and proxy sizes for one separation."""

    D: float
    times: np.ndarray
    w_l2: np.ndarray
    w_lp: np.ndarray
    w_h1: np.ndarray
    eps0: float
    eps1: float
    sigma: float
    horizon: bool
    terminated_by: str
    hump_h1: float
    combined_s1: float = float("nan")  # order-1 proxy of the combined run itself

    def eps(self, s: float = 0.0) -> float:
        """Interpolated proxy size at regularity ``s`` in [0, 1]."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"regularity s must lie in [0, 1], got {s}")
        if self.eps0 == 0.0 or self.eps1 == 0.0:
            return 0.0
        return float(self.eps0 ** (1.0 - s) * self.eps1**s)

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(self.D), float(t), float(self.w_l2[i]), float(self.w_lp[i]),
                   float(self.w_h1[i]))

    header = ("D", "time", "w_l2", "w_lp", "w_h1")

    def summary_row(self):
        return (float(self.D), float(self.eps0), float(self.eps1),
                int(self.horizon), self.terminated_by)

    summary_header = ("D", "eps0", "eps1", "horizon", "terminated_by")


@dataclass
class SweepResult:
    reports: list
    eps_target: float
    s: float
    minimal_D: Optional[float]

    def eps_values(self) -> np.ndarray:
        return np.array([r.eps(self.s) for r in self.reports])


@dataclass
class GDProxyResult:
    """Verdict of the bounded-orbit proxy for one combined run."""

    bounded: bool
    horizon: bool
    s1_combined: float
    bound_m: float
    tail_eps_measured: float
    tail_eps: float
    reasons: tuple
    report: Optional[ConcatReport]


def base_run(scenario: ConcatScenario) -> Trajectory:
    """Single centered hump evolved once; all side runs are rolls of this."""
    grid = scenario.grid()
    traj = evolve(scenario.hump(grid), scenario.params(), scenario.solve_config())
    if not traj.reached_horizon:
        raise RuntimeError(f"base hump run stopped early: {traj.terminated_by.value}")
    return traj


def _shift_vector(grid: Grid, offset: float):
    return (offset,) + (0.0,) * (grid.d - 1)


def concat_run(scenario: ConcatScenario, D: float, base: Optional[Trajectory] = None,
               w0: Optional[Field] = None, centers: Optional[Sequence[float]] = None) -> ConcatReport:
    """Evolve superposed humps at separation ``D`` and size the defect.

    ``w(t) = combined(t) - sum of reference humps`` with every reference
    obtained by rolling the base run to one of the ``centers`` (default
    ``-D/2`` and ``+D/2``; any arrangement with pairwise gaps >= ``D``
    works, all rolls of the one base run). An optional seed ``w0`` perturbs
    the combined datum. A combined run that trips a guard yields a report
    with ``horizon=False`` and proxy sizes over the covered span.
    """
    grid = scenario.grid()
    if centers is None:
        scenario.check_separation(grid, D)
        centers = (-0.5 * D, +0.5 * D)
    else:
        centers = tuple(float(c) for c in centers)
        scenario.check_centers(grid, centers, D)
    shifts = [_shift_vector(grid, c) for c in centers]
    if base is None:
        base = base_run(scenario)

    def reference(i):
        total = translate(base.snapshots[i], shifts[0]).values
        for s in shifts[1:]:
            total = total + translate(base.snapshots[i], s).values
        return total

    combined0 = Field(grid, reference(0))
    if w0 is not None:
        if w0.grid != grid:
            raise ValueError("perturbation w0 lives on the wrong grid")
        combined0 = Field(grid, combined0.values + w0.values)
    traj = evolve(combined0, scenario.params(), scenario.solve_config())
    n = len(traj.times)
    w_fields = [Field(grid, traj.snapshots[i].values - reference(i)) for i in range(n)]
    p = scenario.sigma + 2.0
    w_l2 = np.array([norm_lp(w, 2) for w in w_fields])
    w_lp = np.array([norm_lp(w, p) for w in w_fields])
    w_h1 = np.array([norm_hs(w, 1.0) for w in w_fields])
    eps0 = discrete_strichartz_norm(traj.times, w_fields, scenario.sigma, order=0)
    eps1 = discrete_strichartz_norm(traj.times, w_fields, scenario.sigma, order=1)
    combined_s1 = discrete_strichartz_norm(traj.times, traj.snapshots, scenario.sigma, order=1)
    return ConcatReport(
        D=D, times=traj.times, w_l2=w_l2, w_lp=w_lp, w_h1=w_h1, eps0=eps0, eps1=eps1,
        sigma=scenario.sigma, horizon=traj.reached_horizon,
        terminated_by=traj.terminated_by.value, hump_h1=norm_hs(base.snapshots[0], 1.0),
        combined_s1=combined_s1,
    )


def d_sweep(scenario: ConcatScenario, separations: Sequence[float], eps_target: float,
            s: float = 0.0, executor=None) -> SweepResult:
    """Concatenation runs over increasing separations.

    Returns every report plus the smallest separation whose interpolated
    proxy size meets ``eps_target`` (None when none does). With an executor
    the combined runs go wide; results keep the input order either way.
    """
    seps = [float(D) for D in separations]
    if sorted(seps) != seps:
        raise ValueError("separations must be increasing")
    base = base_run(scenario)
    grid = scenario.grid()
    for D in seps:
        scenario.check_separation(grid, D)

    def job(D):
        return concat_run(scenario, D, base=base)

    mapper = executor.map if executor is not None else map
    reports = list(mapper(job, seps))
    minimal = None
    for rep in reports:
        if rep.horizon and rep.eps(s) <= eps_target:
            minimal = rep.D
            break
    return SweepResult(reports=reports, eps_target=eps_target, s=s, minimal_D=minimal)


def gd_proxy(scenario: ConcatScenario, D: float, bound_m: float, tail_eps: float,
             base: Optional[Trajectory] = None, w0: Optional[Field] = None,
             tail_fraction: float = 0.5, centers: Optional[Sequence[float]] = None) -> GDProxyResult:
    """Bounded-orbit proxy: horizon reached, H^1 proxy capped, late defect small.

    The combined run counts as bounded when it reaches the horizon, its own
    order-1 space-time proxy stays at or below ``bound_m``, and the defect's
    order-0 proxy over the trailing ``tail_fraction`` of the span is at most
    ``tail_eps``. ``centers`` spreads more than two humps; the defect is then
    measured against the matching sum of rolled references.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    grid = scenario.grid()
    if centers is None:
        scenario.check_separation(grid, D)
    else:
        scenario.check_centers(grid, centers, D)
    if base is None:
        try:
            base = base_run(scenario)
        except RuntimeError as err:
            # a single hump that cannot even reach the horizon is the
            # clearest unbounded verdict there is
            return GDProxyResult(
                bounded=False, horizon=False, s1_combined=float("nan"), bound_m=bound_m,
                tail_eps_measured=float("inf"), tail_eps=tail_eps,
                reasons=(str(err),), report=None,
            )
    rep = concat_run(scenario, D, base=base, w0=w0, centers=centers)
    reasons = []
    if not rep.horizon:
        reasons.append(f"combined run stopped early: {rep.terminated_by}")
    s1 = rep.combined_s1
    if s1 > bound_m:
        reasons.append(f"order-1 proxy {s1:.4g} exceeds bound {bound_m:.4g}")
    t_lo = rep.times[0] + (rep.times[-1] - rep.times[0]) * (1.0 - tail_fraction)
    tail = float(rep.w_l2[rep.times >= t_lo - 1e-12].max()) if rep.horizon else np.inf
    if tail > tail_eps:
        reasons.append(f"late defect {tail:.4g} exceeds {tail_eps:.4g}")
    return GDProxyResult(
        bounded=not reasons, horizon=rep.horizon, s1_combined=s1, bound_m=bound_m,
        tail_eps_measured=tail, tail_eps=tail_eps, reasons=tuple(reasons), report=rep,
    )


def build_spread_data(grid: Grid, centers: Sequence, amp: float, width: float,
                      preset: str = "gaussian") -> Field:
    """Sum of identical humps at the given centers; overlaps are rejected.

    Disjointness is checked through the mass of pairwise products, so for
    n humps the squared L^2 norm is n times a single hump's to roundoff.
    """
    if preset not in ("gaussian", "smoothbump"):
        raise ValueError(f"unknown hump preset {preset!r}")
    if len(centers) < 1:
        raise ValueError("need at least one center")
    humps = []
    for c in centers:
        center = tuple(float(x) for x in (c if isinstance(c, (tuple, list)) else (c,)))
        if len(center) != grid.d:
            raise ValueError(f"center {center} has wrong dimension for d={grid.d}")
        if preset == "gaussian":
            humps.append(gaussian(grid, amp=amp, width=width, center=center))
        else:
            humps.append(smooth_bump(grid, amp=amp, radius=width, center=center))
    unit2 = norm_lp(humps[0], 2) ** 2
    for i in range(len(humps)):
        for j in range(i + 1, len(humps)):
            cross = grid.cell_volume * float(
                np.sum(np.abs(humps[i].values) * np.abs(humps[j].values))
            )
            if cross > 1e-12 * unit2:
                raise ValueError(
                    f"humps {i} and {j} overlap (relative product mass {cross / unit2:.2e})"
                )
    total = zero_field(grid).values
    for hump in humps:
        total = total + hump.values
    return Field(grid, total)


def coupled_concat_run(scenario: ConcatScenario, D: float, coupling: CoupledParams):
    """Two-component concatenation: one hump per component, far apart.

    The reference runs evolve each hump with the partner zeroed (the system
    then reduces to scalar flows); the defect per component measures how
    much the cross coupling stirs at separation ``D``. Returns the two
    :class:`ConcatReport`-shaped defect reports (u first).
    """
    grid = scenario.grid()
    scenario.check_separation(grid, D)
    cfg = scenario.solve_config()
    u0 = scenario.hump(grid, center=_shift_vector(grid, -0.5 * D))
    v0 = scenario.hump(grid, center=_shift_vector(grid, +0.5 * D))
    zero = zero_field(grid)
    tu_ref, _ = evolve_coupled(u0, zero, coupling, cfg)
    _, tv_ref = evolve_coupled(zero, v0, coupling, cfg)
    tu, tv = evolve_coupled(u0, v0, coupling, cfg)
    sigma = 2.0 * coupling.p
    reports = []
    for traj, ref in ((tu, tu_ref), (tv, tv_ref)):
        n = min(len(traj.times), len(ref.times))
        w_fields = [Field(grid, traj.snapshots[i].values - ref.snapshots[i].values)
                    for i in range(n)]
        times = traj.times[:n]
        p = sigma + 2.0
        reports.append(ConcatReport(
            D=D, times=times,
            w_l2=np.array([norm_lp(w, 2) for w in w_fields]),
            w_lp=np.array([norm_lp(w, p) for w in w_fields]),
            w_h1=np.array([norm_hs(w, 1.0) for w in w_fields]),
            eps0=discrete_strichartz_norm(times, w_fields, sigma, order=0),
            eps1=discrete_strichartz_norm(times, w_fields, sigma, order=1),
            sigma=sigma, horizon=traj.reached_horizon,
            terminated_by=traj.terminated_by.value, hump_h1=norm_hs(u0, 1.0),
            combined_s1=discrete_strichartz_norm(times, traj.snapshots[:n], sigma, order=1),
        ))
    return reports[0], reports[1]
