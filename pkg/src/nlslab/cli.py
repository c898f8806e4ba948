"""Command line front end.

Every command reads one TOML run description (see ``config``) and writes
CSV reports under ``--out``. Exit codes: 0 on success, 1 when ``--strict``
is set and a checked inequality or target was violated, 2 for a broken or
incomplete run description.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import Config, ConfigError, load_config, validate_config
from .core import norm_lp
from .dynamics import evolve
from .estimates import (
    EstimateViolation,
    check_disturbance_boosted,
    check_disturbance_linear,
    check_disturbance_lp,
    check_disturbance_nls,
    cone_mass,
    interaction_norm,
    scattering_localization,
    virial_track,
)
from .experiments import (
    build_spread_data,
    coupled_concat_run,
    d_sweep,
    discrete_strichartz_norm,
    gd_proxy,
)
from .regions import HalfSpace
from .storage import save_trajectory, write_csv, write_report

COMMANDS = ("validate", "simulate", "disturbance", "virial", "interaction",
            "concat", "lens", "coupled", "gdproxy", "spread")


def _say(command: str, text: str):
    print(f"[{command}] {text}")


def _require(cfg: Config, what: str, attr: str):
    if getattr(cfg, attr) is None:
        raise ConfigError(f"the {what} command needs a [{attr}] section")


def _pool(jobs: int):
    return ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None


def _cmd_validate(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    notes = validate_config(cfg)
    for note in notes:
        _say("validate", f"note: {note}")
    _say("validate", "ok")
    return 0


def _cmd_simulate(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    grid = cfg.grid.build()
    traj = evolve(cfg.initial_u.build(grid), cfg.params.build(), cfg.solve.build())
    folder = save_trajectory(out / "run", traj)
    mass_drift = float(np.abs(traj.mass_history - traj.mass_history[0]).max())
    _say("simulate", f"{len(traj.times)} snapshots -> {folder}")
    _say("simulate", f"terminated_by={traj.terminated_by.value} mass_drift={mass_drift:.3e}")
    if strict and not traj.reached_horizon:
        return 1
    return 0


def _cmd_disturbance(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    _require(cfg, "disturbance", "source")
    _require(cfg, "disturbance", "target")
    grid = cfg.grid.build()
    params = cfg.params.build()
    u0 = cfg.initial_u.build(grid)
    src = cfg.source.build(grid.d)
    tgt = cfg.target.build(grid.d, src)
    traj = evolve(u0, params, cfg.solve.build())
    violations = []

    if params.lam == 0.0:
        rep = check_disturbance_linear(u0, src, tgt, traj, mode=cfg.mode)
    else:
        rep = check_disturbance_nls(u0, src, tgt, traj, mode=cfg.mode)
    write_report(out, "disturbance", rep.tag, rep)
    _say("disturbance", f"{rep.tag}: dist={rep.dist:g} worst_margin={rep.worst_margin:.3e}")
    if not rep.ok:
        violations.append(rep.tag)

    boosts = cfg.sweep.boosts
    if boosts:
        def boosted(b):
            return check_disturbance_boosted(u0, src, tgt, traj, b)

        pool = _pool(jobs)
        mapper = pool.map if pool is not None else map
        reports = list(mapper(boosted, boosts))
        if pool is not None:
            pool.shutdown()
        for b, rb in zip(boosts, reports):
            write_report(out, "disturbance", "boosted", rb, value=b)
            _say("disturbance", f"boosted b={b:g}: worst_margin={rb.worst_margin:.3e}")
            if not rb.ok:
                violations.append(f"boosted_{b:g}")

    for gamma in cfg.sweep.gammas:
        try:
            times, vals, bound = cone_mass(traj, src, gamma)
        except EstimateViolation as err:
            _say("disturbance", f"cone gamma={gamma:g}: VIOLATED ({err})")
            violations.append(f"cone_{gamma:g}")
        else:
            write_csv(out / f"disturbance_cone_{gamma:g}.csv",
                      ("time", "outside_mass", "bound"),
                      ((float(t), float(v), float(bound)) for t, v in zip(times, vals)))
            _say("disturbance", f"cone gamma={gamma:g}: max={vals.max():.3e} bound={bound:.3e}")

    if cfg.thresholds.lp_time > 0:
        if traj.snapshot_stride == 1:
            chk = check_disturbance_lp(u0, src, tgt, traj, cfg.thresholds.lp_time)
            write_report(out, "disturbance", "lp", chk)
            _say("disturbance", f"lp at t={chk.t:g}: ratio={chk.ratio:.3e}")
            if chk.lhs > chk.rhs:
                violations.append("lp")
        else:
            _say("disturbance", "lp check skipped (needs snapshot_stride = 1)")

    if violations:
        _say("disturbance", f"violations: {', '.join(violations)}")
        return 1 if strict else 0
    return 0


def _cmd_virial(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    grid = cfg.grid.build()
    params = cfg.params.build()
    traj = evolve(cfg.initial_u.build(grid), params, cfg.solve.build())
    rep = virial_track(traj, params)
    write_report(out, "virial", "track", rep)
    _say("virial", f"V0={rep.variance[0]:.6g} vdot0={rep.vdot0:.3e} 16E={rep.bound_16e:.6g}")
    if rep.t_star is not None:
        _say("virial", f"t_star={rep.t_star:.6g} t_detect={rep.t_detect}")
    if rep.asserted:
        tol = 1e-6 * max(1.0, abs(rep.bound_16e))
        if rep.worst_excess > tol:
            _say("virial", f"concavity bound violated by {rep.worst_excess:.3e}")
            return 1 if strict else 0
    return 0


def _cmd_interaction(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    grid = cfg.grid.build()
    params = cfg.params.build()
    solve = cfg.solve.build()
    seps = cfg.sweep.separations
    if not seps:
        raise ConfigError("the interaction command needs [sweep] separations")
    summary = []
    not_decreasing = False
    last = None
    for D in seps:
        cfg_u = replace(cfg.initial_u, center=(-0.5 * D,) + (0.0,) * (grid.d - 1))
        cfg_v = replace(cfg.initial_u, center=(+0.5 * D,) + (0.0,) * (grid.d - 1))
        tu = evolve(cfg_u.build(grid), params, solve)
        tv = evolve(cfg_v.build(grid), params, solve)
        rep = interaction_norm(tu, tv, D=D)
        write_report(out, "interaction", "track", rep, value=D)
        summary.append((float(D), rep.aggregate, float(rep.global_norm.max())))
        _say("interaction", f"D={D:g}: aggregate={rep.aggregate:.3e}")
        if last is not None and rep.aggregate >= last:
            not_decreasing = True
        last = rep.aggregate
    write_csv(out / "interaction_sweep.csv", ("D", "aggregate", "max_global"), summary)
    if not_decreasing:
        _say("interaction", "aggregate failed to decrease with separation")
        return 1 if strict else 0
    return 0


def _cmd_concat(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    seps = cfg.sweep.separations
    if not seps:
        raise ConfigError("the concat command needs [sweep] separations")
    scenario = cfg.scenario()
    pool = _pool(jobs)
    try:
        sweep = d_sweep(scenario, seps, eps_target=cfg.sweep.eps_target, s=cfg.sweep.s,
                        executor=pool)
    finally:
        if pool is not None:
            pool.shutdown()
    for rep in sweep.reports:
        write_report(out, "concat", "track", rep, value=rep.D)
        _say("concat", f"D={rep.D:g}: eps0={rep.eps0:.3e} eps1={rep.eps1:.3e} "
                       f"horizon={rep.horizon}")
    write_csv(out / "concat_sweep.csv", sweep.reports[0].summary_header,
              (r.summary_row() for r in sweep.reports))
    if sweep.minimal_D is None:
        _say("concat", f"no separation reached eps <= {cfg.sweep.eps_target:g}")
        return 1 if strict else 0
    _say("concat", f"minimal D for eps <= {cfg.sweep.eps_target:g}: {sweep.minimal_D:g}")
    return 0


def _cmd_lens(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    _require(cfg, "lens", "source")
    if not cfg.thresholds.freq_offsets:
        raise ConfigError("the lens command needs [thresholds] freq_offsets")
    grid = cfg.grid.build()
    params = cfg.params.build()
    u0 = cfg.initial_u.build(grid)
    src = cfg.source.build(grid.d)
    rows = []
    margins_ok = True
    header = None
    for k0 in cfg.thresholds.freq_offsets:
        rep = scattering_localization(u0, src, HalfSpace(0, "above", k0), params,
                                      cfg.solve.build())
        header = rep.header
        rows.append((float(k0),) + next(iter(rep.rows())))
        _say("lens", f"k>{k0:g}: lhs={rep.lhs:.3e} rhs={rep.rhs:.4g} margin={rep.margin:.4g}")
        margins_ok = margins_ok and rep.margin >= 0
    write_csv(out / "lens.csv", ("k_offset",) + header, rows)
    if not margins_ok:
        _say("lens", "some frequency margin went negative")
        return 1 if strict else 0
    return 0


def _cmd_coupled(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    _require(cfg, "coupled", "coupling")
    seps = cfg.sweep.separations
    if not seps:
        raise ConfigError("the coupled command needs [sweep] separations")
    scenario = cfg.scenario()
    coupling = cfg.coupling.build()
    rows = []
    all_horizon = True
    for D in seps:
        ru, rv = coupled_concat_run(scenario, D, coupling)
        write_report(out, "coupled", "track_u", ru, value=D)
        write_report(out, "coupled", "track_v", rv, value=D)
        rows.append((float(D), ru.eps0, rv.eps0, int(ru.horizon and rv.horizon)))
        _say("coupled", f"D={D:g}: eps0_u={ru.eps0:.3e} eps0_v={rv.eps0:.3e}")
        all_horizon = all_horizon and ru.horizon and rv.horizon
    write_csv(out / "coupled_sweep.csv", ("D", "eps0_u", "eps0_v", "horizon"), rows)
    if not all_horizon:
        _say("coupled", "a coupled run stopped before the horizon")
        return 1 if strict else 0
    return 0


def _cmd_gdproxy(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    seps = cfg.sweep.separations
    if not seps:
        raise ConfigError("the gdproxy command needs [sweep] separations")
    D = seps[-1]
    scenario = cfg.scenario()
    w0 = None
    if cfg.initial_w is not None:
        w0 = cfg.initial_w.build(scenario.grid())
    res = gd_proxy(scenario, D, bound_m=cfg.thresholds.bound_m,
                   tail_eps=cfg.thresholds.tail_eps, w0=w0)
    write_csv(out / "gdproxy.csv",
              ("D", "bounded", "horizon", "s1", "bound_m", "tail", "tail_eps", "reasons"),
              [(float(D), int(res.bounded), int(res.horizon), res.s1_combined,
                res.bound_m, res.tail_eps_measured, res.tail_eps, ";".join(res.reasons))])
    verdict = "bounded" if res.bounded else f"NOT bounded ({'; '.join(res.reasons)})"
    _say("gdproxy", f"D={D:g}: {verdict}")
    if not res.bounded:
        return 1 if strict else 0
    return 0


def _cmd_spread(cfg: Config, out: Path, jobs: int, strict: bool) -> int:
    if cfg.initial_u.preset != "sum" or not cfg.initial_u.centers:
        raise ConfigError("the spread command needs [initial_u] preset = 'sum' with centers")
    grid = cfg.grid.build()
    spec = cfg.initial_u
    u0 = build_spread_data(grid, list(spec.centers), amp=spec.amp, width=spec.width)
    single = replace(spec, preset="gaussian", centers=None, center=None).build(grid)
    ratio = norm_lp(u0, 2) / norm_lp(single, 2)
    n = len(spec.centers)
    traj = evolve(u0, cfg.params.build(), cfg.solve.build())
    s1 = discrete_strichartz_norm(traj.times, traj.snapshots, cfg.params.sigma, order=1)
    bounded = traj.reached_horizon and s1 <= cfg.thresholds.bound_m
    write_csv(out / "spread.csv",
              ("n_humps", "norm_ratio", "root_n", "horizon", "s1", "bound_m", "bounded"),
              [(n, float(ratio), float(np.sqrt(n)), int(traj.reached_horizon),
                s1, cfg.thresholds.bound_m, int(bounded))])
    _say("spread", f"{n} humps: ratio={ratio:.12g} (root n = {np.sqrt(n):.12g})")
    _say("spread", f"horizon={traj.reached_horizon} s1={s1:.4g} bounded={bounded}")
    if not bounded:
        return 1 if strict else 0
    return 0


_HANDLERS = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "disturbance": _cmd_disturbance,
    "virial": _cmd_virial,
    "interaction": _cmd_interaction,
    "concat": _cmd_concat,
    "lens": _cmd_lens,
    "coupled": _cmd_coupled,
    "gdproxy": _cmd_gdproxy,
    "spread": _cmd_spread,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="split-step simulator and estimate checks for focusing/defocusing flows",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} workflow")
        p.add_argument("--config", required=True, help="TOML run description")
        p.add_argument("--out", default="out", help="directory for reports (default: out)")
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
        p.add_argument("--strict", action="store_true",
                       help="exit 1 when a checked inequality or target fails")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command != "validate":
            for note in validate_config(cfg):
                _say(args.command, f"note: {note}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](cfg, out, max(1, args.jobs), args.strict)
    except (ConfigError, FileNotFoundError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except EstimateViolation as err:
        print(f"[{args.command}] violation: {err}", file=sys.stderr)
        return 1 if args.strict else 0
    except ValueError as err:
        # precondition failures (bad region pairs, stride, support) read as
        # run-description problems from the command line
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
