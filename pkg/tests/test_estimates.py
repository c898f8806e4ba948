"""Estimate checks: margins, preconditions, and frozen closed forms.

Frozen oracle values (independent quadrature, scipy.integrate.quad):
  GN_CONST   = 2^(1/6) 3^(-1/12) pi^(-1/6) for the gaussian family, sigma=4, d=1
  V0_FREE    = sqrt(pi)/2 for exp(-x^2/2); free variance sqrt(pi)/2 (1 + 4 t^2)
  FOUR_SQRT_PI = second difference of that parabola (= 16 E, saturated)
  E_BLOWUP, V0_BLOWUP, T_STAR for 3 exp(-x^2), lam=1, sigma=4:
      E = 9/2 sqrt(pi/2) - 243/2 sqrt(pi/6), t* = sqrt(V0 / (-8E))
  coherent state exp(-(x-1)^2/2) under the confining flow:
      V(t) = sqrt(pi) (1 + cos(4t)/2), V''(t) = -8 sqrt(pi) cos(4t)
"""

import numpy as np
import pytest

from nlslab.core import Field, grad_norm_l2, make_grid, norm_lp
from nlslab.data import gaussian, smooth_bump
from nlslab.dynamics import (
    NLSParams,
    SolveConfig,
    Termination,
    Trajectory,
    evolve,
    evolve_harmonic,
    galilean_boost,
)
from nlslab.estimates import (
    EstimateViolation,
    calibrate_gn_constant,
    check_disturbance_boosted,
    check_disturbance_linear,
    check_disturbance_lp,
    check_disturbance_nls,
    cone_mass,
    gn_theta,
    interaction_norm,
    scattering_localization,
    virial_track,
)
from nlslab.regions import Ball, Complement, Dilation, HalfSpace

GN_CONST = 0.846356335018159
V0_FREE = 0.8862269254527579
FOUR_SQRT_PI = 7.0898154036220635
E_BLOWUP = -82.27763881090978
V0_BLOWUP = 2.819956808959876
T_STAR = 0.06545386929125163

A_BALL = Ball((0.0,), 4.0)
B_FAR = Complement(Dilation(A_BALL, 8.0))


@pytest.fixture(scope="module")
def grid1():
    return make_grid(d=1, L=32.0, N=2048)


@pytest.fixture(scope="module")
def bump_run(grid1):
    """Compactly supported datum, defocusing flow, stride 1."""
    u0 = smooth_bump(grid1, amp=1.0, radius=4.0)
    traj = evolve(u0, NLSParams(-1.0, 4.0), SolveConfig(dt=1e-3, T=1.0, snapshot_stride=1))
    return u0, traj

@pytest.fixture(scope="module")
def gauss_run(grid1):
    """Gaussian datum (no compact support), defocusing flow, stride 1."""
    u0 = gaussian(grid1)
    traj = evolve(u0, NLSParams(-1.0, 4.0), SolveConfig(dt=1e-3, T=1.0, snapshot_stride=1))
    return u0, traj


@pytest.fixture(scope="module")
def free_run(grid1):
    u0 = gaussian(grid1)
    traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=2e-3, T=2.0, snapshot_stride=25))
    return u0, traj


class TestDisturbanceLinear:
    def test_general_margins(self, free_run):
        u0, traj = free_run
        rep = check_disturbance_linear(u0, A_BALL, B_FAR, traj, mode="general")
        assert rep.dist == 8.0
        assert rep.ok
        assert rep.tag == "linear_general"
        # rhs slope is constant: 2 ||grad u0|| / dist plus the fixed tail
        slope = np.diff(rep.rhs) / np.diff(rep.times)
        assert slope == pytest.approx(2 * grad_norm_l2(u0) / 8.0, rel=1e-12)

    def test_supported_needs_support(self, free_run):
        u0, traj = free_run
        with pytest.raises(ValueError, match="general"):
            check_disturbance_linear(u0, A_BALL, B_FAR, traj, mode="supported")

    def test_supported_bump(self, grid1):
        u0 = smooth_bump(grid1, amp=1.0, radius=4.0)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=2e-3, T=1.0, snapshot_stride=25))
        rep = check_disturbance_linear(u0, A_BALL, B_FAR, traj, mode="supported")
        assert rep.ok
        assert rep.rhs[0] == 0.0

    def test_rejects_nonlinear_run(self, gauss_run):
        u0, traj = gauss_run
        with pytest.raises(ValueError, match="free-flow"):
            check_disturbance_linear(u0, A_BALL, B_FAR, traj, mode="general")

    def test_rejects_touching_regions(self, free_run):
        u0, traj = free_run
        with pytest.raises(ValueError, match="separated"):
            check_disturbance_linear(u0, A_BALL, Complement(A_BALL), traj, mode="general")

    def test_rejects_unknown_mode(self, free_run):
        u0, traj = free_run
        with pytest.raises(ValueError, match="mode"):
            check_disturbance_linear(u0, A_BALL, B_FAR, traj, mode="strict")

    def test_two_dim_smoke(self):
        g = make_grid(d=2, L=16.0, N=128)
        u0 = gaussian(g)
        traj = evolve(u0, NLSParams(0.0, 2.0), SolveConfig(dt=5e-3, T=0.5, snapshot_stride=20))
        rep = check_disturbance_linear(u0, Ball((0.0, 0.0), 3.0), HalfSpace(0, "above", 8.0),
                                       traj, mode="general")
        assert rep.dist == 5.0
        assert rep.ok


class TestDisturbanceNLS:
    def test_needs_stride_one(self, grid1, free_run):
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(-1.0, 4.0), SolveConfig(dt=1e-2, T=0.1, snapshot_stride=5))
        with pytest.raises(ValueError, match="stride"):
            check_disturbance_nls(u0, A_BALL, B_FAR, traj, mode="general")

    def test_general_margins(self, gauss_run):
        u0, traj = gauss_run
        rep = check_disturbance_nls(u0, A_BALL, B_FAR, traj, mode="general")
        assert rep.ok
        assert rep.lhs.max() < 1e-2  # nothing reaches the far region this early

    def test_supported_bump(self, bump_run):
        u0, traj = bump_run
        rep = check_disturbance_nls(u0, A_BALL, B_FAR, traj, mode="supported")
        assert rep.ok
        assert rep.tag == "nls_supported"
        assert rep.lhs[0] == 0.0 and rep.rhs[0] == 0.0

    def test_rows_match_header(self, bump_run):
        u0, traj = bump_run
        rep = check_disturbance_nls(u0, A_BALL, B_FAR, traj, mode="supported")
        row = next(iter(rep.rows()))
        assert len(row) == len(rep.header)


class TestDisturbanceBoosted:
    B_HALF = HalfSpace(0, "above", 12.0)

    def test_zero_boost_is_supported_bound(self, bump_run):
        u0, traj = bump_run
        rep0 = check_disturbance_boosted(u0, A_BALL, self.B_HALF, traj, 0.0)
        sup = check_disturbance_nls(u0, A_BALL, self.B_HALF, traj, mode="supported")
        assert np.array_equal(rep0.rhs, sup.rhs)
        assert rep0.b == 0.0

    def test_large_boost_caps_at_mass(self, bump_run):
        # b -> inf: rhs -> ||u0||_2 * (t b / (dist + t b)) < ||u0||_2
        u0, traj = bump_run
        rep = check_disturbance_boosted(u0, A_BALL, self.B_HALF, traj, 1e3)
        assert rep.ok
        assert rep.rhs.max() <= 1.01 * norm_lp(u0, 2)

    def test_moderate_boosts_hold(self, bump_run):
        u0, traj = bump_run
        for b in (0.5, 1.0, 2.0):
            rep = check_disturbance_boosted(u0, A_BALL, self.B_HALF, traj, b)
            assert rep.ok, f"boost {b} margin {rep.worst_margin}"

    def test_rejects_ball_target(self, bump_run):
        u0, traj = bump_run
        with pytest.raises(ValueError, match="half-space"):
            check_disturbance_boosted(u0, A_BALL, Ball((20.0,), 2.0), traj, 1.0)

    def test_rejects_negative_boost(self, bump_run):
        u0, traj = bump_run
        with pytest.raises(ValueError, match="boost"):
            check_disturbance_boosted(u0, A_BALL, self.B_HALF, traj, -0.5)

    def test_rejects_net_momentum(self, grid1):
        u0 = galilean_boost(smooth_bump(grid1, amp=1.0, radius=4.0), 2 * np.pi / 32.0, (1.0,))
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-2, T=0.05, snapshot_stride=1))
        with pytest.raises(ValueError, match="momentum"):
            check_disturbance_boosted(u0, A_BALL, self.B_HALF, traj, 1.0)


class TestLpChain:
    def test_theta_value(self):
        assert gn_theta(1, 4.0) == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert gn_theta(2, 2.0) == pytest.approx(0.5, rel=1e-15)

    def test_theta_out_of_range(self):
        with pytest.raises(ValueError, match="interpolation exponent"):
            gn_theta(3, 8.0)

    def test_calibration_matches_closed_form(self, grid1):
        # gaussian ratio is dilation invariant, every width gives the same value
        assert calibrate_gn_constant(grid1, 4.0) == pytest.approx(GN_CONST, rel=1e-12)

    def test_chain_bound_holds(self, bump_run):
        u0, traj = bump_run
        chk = check_disturbance_lp(u0, A_BALL, B_FAR, traj, 0.5)
        assert chk.t == pytest.approx(0.5, abs=1e-12)
        assert chk.theta == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert chk.lhs <= chk.rhs
        assert chk.ratio < 1.0

    def test_snapshot_snapping(self, bump_run):
        u0, traj = bump_run
        with pytest.raises(ValueError, match="snapshot"):
            check_disturbance_lp(u0, A_BALL, B_FAR, traj, 2.5)


class TestConeMass:
    def test_bound_holds(self, free_run):
        u0, traj = free_run
        times, vals, bound = cone_mass(traj, A_BALL, 2.0)
        assert bound == pytest.approx(2 * grad_norm_l2(u0) / 2.0, rel=1e-12)
        assert len(times) == len(vals)
        assert vals.max() <= bound

    def test_rejects_nonlinear(self, gauss_run):
        u0, traj = gauss_run
        with pytest.raises(ValueError, match="free-flow"):
            cone_mass(traj, A_BALL, 2.0)

    def test_rejects_bad_speed(self, free_run):
        _, traj = free_run
        with pytest.raises(ValueError, match="gamma"):
            cone_mass(traj, A_BALL, 0.0)

    def test_box_overflow_warns(self, free_run, caplog):
        _, traj = free_run
        with caplog.at_level("WARNING", logger="nlslab.estimates"):
            cone_mass(traj, A_BALL, 100.0)
        assert any("box" in r.message for r in caplog.records)

    def test_violation_raises(self, grid1):
        # absurd speed with a pinhole source: bound ~ 1e-6 while the mass sits outside
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-2, T=0.05, snapshot_stride=1))
        with pytest.raises(EstimateViolation):
            cone_mass(traj, Ball((0.0,), 0.5), 1e6)


class TestVirial:
    def test_free_gaussian_track(self, grid1):
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-3, T=0.2, snapshot_stride=10))
        rep = virial_track(traj)
        assert rep.variance[0] == pytest.approx(V0_FREE, rel=1e-10)
        exact = V0_FREE * (1 + 4 * traj.times**2)
        assert np.abs(rep.variance - exact).max() < 1e-10
        assert rep.vdot0 == pytest.approx(0.0, abs=1e-9)
        # free variance is an exact parabola: second differences sit at 4 sqrt(pi),
        # which is also 16 E here (E = sqrt(pi)/4), so the bound saturates
        assert np.abs(rep.second_difference - FOUR_SQRT_PI).max() < 1e-9
        assert rep.bound_16e == pytest.approx(FOUR_SQRT_PI, rel=1e-12)
        assert rep.worst_excess < 1e-9
        assert rep.asserted
        assert rep.t_star is None and rep.t_detect is None

    def test_parabola_method(self, grid1):
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-3, T=0.1, snapshot_stride=10))
        rep = virial_track(traj)
        assert rep.parabola(traj.times) == pytest.approx(rep.variance, abs=1e-8)

    def test_coherent_state_second_difference_converges(self):
        # confined flow, gaussian displaced to x=1: V(t) = sqrt(pi)(1 + cos(4t)/2).
        # nonzero V'''' makes the stencil+splitting error visible; halving dt
        # (snapshots at every step) must cut it by about 4
        g = make_grid(d=1, L=16.0, N=1024)
        u0 = gaussian(g, center=(1.0,))
        errs = {}
        for dt in (2e-3, 1e-3):
            traj = evolve_harmonic(u0, NLSParams(0.0, 4.0), SolveConfig(dt=dt, T=0.1, snapshot_stride=1))
            rep = virial_track(traj)
            t_mid = rep.times[1:-1]
            v_exact = np.sqrt(np.pi) * (1 + np.cos(4 * rep.times) / 2)
            assert np.abs(rep.variance - v_exact).max() < 1e-6
            assert not rep.asserted  # confined flow, concavity bound not claimed
            i = int(np.argmin(np.abs(t_mid - 0.05)))
            errs[dt] = abs(rep.second_difference[i] - (-8 * np.sqrt(np.pi) * np.cos(4 * t_mid[i])))
        ratio = errs[2e-3] / errs[1e-3]
        assert 3.5 <= ratio <= 4.5

    def test_focusing_blowup(self):
        g = make_grid(d=1, L=8.0, N=1024)
        u0 = Field(g, 3.0 * np.exp(-np.asarray(g.x1) ** 2).astype(complex))
        cfg = SolveConfig(dt=1e-4, T=0.2, snapshot_stride=1, gradient_blowup_factor=50.0)
        traj = evolve(u0, NLSParams(1.0, 4.0), cfg)
        assert traj.terminated_by is Termination.BLOWUP_DETECTED
        rep = virial_track(traj)
        assert rep.e0 == pytest.approx(E_BLOWUP, rel=1e-9)
        assert rep.variance[0] == pytest.approx(V0_BLOWUP, rel=1e-9)
        assert rep.t_star == pytest.approx(T_STAR, rel=1e-6)
        assert rep.t_detect is not None
        assert rep.t_detect <= rep.t_star

    def test_needs_three_snapshots(self, grid1):
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-2, T=0.02, snapshot_stride=1))
        traj_short = Trajectory(
            grid=traj.grid, params=traj.params, dt=traj.dt, snapshot_stride=1,
            times=traj.times[:2], snapshots=traj.snapshots[:2],
            mass_history=traj.mass_history[:2], energy_history=traj.energy_history[:2],
            grad_history=traj.grad_history[:2], running_sup_grad=traj.running_sup_grad[:2],
            shell_history=traj.shell_history[:2], terminated_by=traj.terminated_by,
        )
        with pytest.raises(ValueError, match="three"):
            virial_track(traj_short)

    def test_needs_uniform_times(self, grid1):
        u0 = gaussian(grid1)
        traj = evolve(u0, NLSParams(0.0, 4.0), SolveConfig(dt=1e-2, T=0.05, snapshot_stride=1))
        warped = Trajectory(
            grid=traj.grid, params=traj.params, dt=traj.dt, snapshot_stride=1,
            times=traj.times ** 1.5 + traj.times, snapshots=traj.snapshots,
            mass_history=traj.mass_history, energy_history=traj.energy_history,
            grad_history=traj.grad_history, running_sup_grad=traj.running_sup_grad,
            shell_history=traj.shell_history, terminated_by=traj.terminated_by,
        )
        with pytest.raises(ValueError, match="spaced"):
            virial_track(warped)


@pytest.fixture(scope="module")
def pair():
    # close enough that the humps measurably interact over the window
    g = make_grid(d=1, L=32.0, N=1024)
    p, cfg = NLSParams(-1.0, 4.0), SolveConfig(dt=1e-3, T=0.2, snapshot_stride=20)
    tu = evolve(gaussian(g, amp=0.8, center=(-2.0,)), p, cfg)
    tv = evolve(gaussian(g, amp=0.8, center=(2.0,)), p, cfg)
    return g, tu, tv


class TestInteraction:
    def test_zero_partner_vanishes(self, pair):
        g, tu, _ = pair
        from nlslab.core import zero_field

        p, cfg = NLSParams(-1.0, 4.0), SolveConfig(dt=1e-3, T=0.2, snapshot_stride=20)
        tz = evolve(zero_field(g), p, cfg)
        rep = interaction_norm(tu, tz)
        assert np.all(rep.global_norm == 0.0)
        assert rep.aggregate == 0.0

    def test_mirror_symmetry(self, pair):
        # data are mirror images, so the two half-line norms agree
        _, tu, tv = pair
        rep = interaction_norm(tu, tv, D=4.0)
        assert rep.D == 4.0
        assert rep.gamma_exp == pytest.approx(1.2, rel=1e-15)
        assert rep.r == rep.gamma_exp
        assert rep.global_norm.min() > 1e-8  # genuinely interacting pair
        np.testing.assert_allclose(rep.upper_norm, rep.lower_norm, rtol=1e-8)
        assert np.all(rep.upper_norm <= rep.global_norm * (1 + 1e-12))
        assert rep.aggregate > 0

    def test_window(self, pair):
        _, tu, tv = pair
        rep = interaction_norm(tu, tv, window=(0.05, 0.15))
        assert rep.times.min() >= 0.05 - 1e-12
        assert rep.times.max() <= 0.15 + 1e-12
        with pytest.raises(ValueError, match="window"):
            interaction_norm(tu, tv, window=(0.55, 0.60))

    def test_requires_matching_times(self, pair):
        g, tu, _ = pair
        p = NLSParams(-1.0, 4.0)
        tv_coarse = evolve(gaussian(g, amp=0.8, center=(5.0,)), p,
                           SolveConfig(dt=1e-3, T=0.2, snapshot_stride=40))
        with pytest.raises(ValueError, match="time"):
            interaction_norm(tu, tv_coarse)

    def test_requires_common_grid(self, pair):
        _, tu, _ = pair
        g2 = make_grid(d=1, L=32.0, N=512)
        p, cfg = NLSParams(-1.0, 4.0), SolveConfig(dt=1e-3, T=0.2, snapshot_stride=20)
        tv2 = evolve(gaussian(g2, amp=0.8, center=(5.0,)), p, cfg)
        with pytest.raises(ValueError, match="grid"):
            interaction_norm(tu, tv2)

    def test_requires_common_power(self, pair):
        g, tu, _ = pair
        cfg = SolveConfig(dt=1e-3, T=0.2, snapshot_stride=20)
        tv_other = evolve(gaussian(g, amp=0.8, center=(5.0,)), NLSParams(-1.0, 2.0), cfg)
        with pytest.raises(ValueError, match="power"):
            interaction_norm(tu, tv_other)


class TestScatteringLocalization:
    def test_rejects_focusing(self, grid1):
        with pytest.raises(ValueError, match="focusing"):
            scattering_localization(gaussian(grid1), A_BALL, HalfSpace(0, "above", 8.0),
                                    NLSParams(1.0, 4.0))

    def test_margins_positive(self):
        g = make_grid(d=1, L=16.0, N=1024)
        u0 = gaussian(g)
        a = Ball((0.0,), 2.0)
        cfg = SolveConfig(dt=np.pi / 2 / 400, T=1.0, snapshot_stride=100)
        rep4 = scattering_localization(u0, a, HalfSpace(0, "above", 4.0), NLSParams(-1.0, 4.0), cfg)
        rep8 = scattering_localization(u0, a, HalfSpace(0, "above", 8.0), NLSParams(-1.0, 4.0), cfg)
        assert rep4.margin > 0 and rep8.margin > 0
        assert rep8.lhs < rep4.lhs  # the spectrum decays with frequency
        assert rep4.rhs == pytest.approx(np.pi * rep4.sigma_norm / rep4.dist + rep4.tail, rel=1e-12)
        assert rep4.dist == 2.0 and rep8.dist == 6.0

    def test_early_stop_raises(self):
        # datum overflowing the box trips the shell guard immediately
        g = make_grid(d=1, L=4.0, N=256)
        u0 = gaussian(g, width=3.0)
        with pytest.raises(EstimateViolation, match="shell"):
            scattering_localization(u0, Ball((0.0,), 1.0), HalfSpace(0, "above", 3.0),
                                    NLSParams(-1.0, 4.0),
                                    SolveConfig(dt=1e-3, T=1.0, snapshot_stride=1))
