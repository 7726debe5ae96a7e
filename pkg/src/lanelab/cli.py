"""Command-line entry point: ``lanelab <command> [options]``.

Every command accepts ``--config FILE`` (key=value lines); explicit flags win
over the file. Outputs go to ``--out`` (default ``$LANELAB_OUTPUT_ROOT`` or
``./out``). On failure a single ``status=fail ...`` line goes to stderr.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, lane_emden as le, spectral as sp, stability as st
from .euler import Blowup, StepControl, evolve

log = logging.getLogger("lanelab")

ENERGY_DRIFT_TOL = st.ENERGY_DRIFT_TOL
LS_DRIFT_TOL = st.LS_DRIFT_TOL


class CommandFailed(Exception):
    pass


def _add_common(p):
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--cfl", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--s", dest="norm_s", type=float, action="append",
                   help="L^s norm to track (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--pert", dest="pert_kind", choices=io.PERT_KINDS)
    p.add_argument("--sp-constrain", dest="constrain_to_Sp", action="store_const", const=True)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="lanelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    helps = {
        "ground-state": "solve the Lane-Emden ground state, write fields and constants",
        "maximize": "maximize E over the unit L^(1+1/p) ball, compare mu_p routes",
        "evolve": "free Euler evolution of the steady state with a conservation audit",
        "stability": "perturb, evolve and write an orbital-stability report",
        "spectrum": "p=1 eigen diagnostics and the bound 2*lambda_1*E(w) <= 1",
        "verify": "run the identity suite; nonzero exit on any failure",
    }
    for name in io.COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _add_common(p)
        if name == "spectrum":
            p.add_argument("--field", dest="fields", type=Path, action="append", default=[],
                           help="field file to test against the bound (repeatable)")
    return parser


def resolve_config(args):
    text = args.config.read_text() if args.config else ""
    overrides = {k: getattr(args, k, None) for k in io.config_keys() if k != "command"}
    return io.parse_config(text, command=args.command, **overrides)


def _opts(cfg):
    return le.SolverOptions(tol=cfg.tol, max_iter=cfg.max_iter)


def _steady_state(cfg, grid):
    if cfg.p > 1:
        return le.solve_ground_state(cfg.p, grid, _opts(cfg))
    if cfg.p < 1:
        return le.solve_sublinear(cfg.p, grid, _opts(cfg))
    return le.solve_eigen(grid)


def _outdir(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text("".join(f"{k}={v}\n" for k, v in cfg.echo().items()))
    return out


def _t_end(cfg, solution):
    if cfg.t_end is not None:
        return cfg.t_end
    return 10.0 * st.eddy_time(solution.omega)


def cmd_ground_state(cfg):
    grid = sp.make_grid(cfg.n)
    sol = le.solve_ground_state(cfg.p, grid, _opts(cfg))
    out = _outdir(cfg)
    io.write_field(out / "u.field", sol.u)
    io.write_field(out / "omega.field", sol.omega)
    io.write_constants(out / "constants.txt", sol, cfg.echo())
    print(f"p={io.fmt(sol.p)} n={cfg.n} iterations={sol.iterations}")
    print(f"c_p={io.fmt(sol.c_p)}")
    print(f"mu_p={io.fmt(sol.mu_p)}")
    print(f"M_p={io.fmt(sol.M_p)}")
    print(f"residual={sol.residual:.3e} nehari_deficit={sol.nehari_deficit:.3e}")


def cmd_maximize(cfg):
    grid = sp.make_grid(cfg.n)
    wstar, e1 = le.maximize_energy_ball(cfg.p, grid, _opts(cfg))
    out = _outdir(cfg)
    io.write_field(out / "wstar.field", wstar)
    print(f"p={io.fmt(cfg.p)} n={cfg.n} e1={io.fmt(e1)}")
    if cfg.p > 1:
        sol = le.solve_ground_state(cfg.p, grid, _opts(cfg))
        c = le.derive_constants(cfg.p, sol.c_p, e1)
        rel = abs(c.mu_from_cp - c.mu_from_e1) / c.mu_from_cp
        print(f"mu_from_cp={io.fmt(c.mu_from_cp)} mu_from_e1={io.fmt(c.mu_from_e1)} "
              f"rel_diff={rel:.3e}")
    elif cfg.p == 1:
        print(f"2*lambda_1*e1={io.fmt(4.0 * e1)}")


def _evolve_rows(traj, s_values):
    e0 = traj.records[0]["energy"]
    cols = [("t", [r["t"] for r in traj.records]),
            ("energy", [r["energy"] for r in traj.records]),
            ("energy_drift", [(r["energy"] - e0) / e0 for r in traj.records])]
    for s in s_values:
        key = f"L{s:g}"
        l0 = traj.records[0][key]
        cols.append((key, [r[key] for r in traj.records]))
        cols.append((f"ls_drift_{key}", [(r[key] - l0) / l0 for r in traj.records]))
    cols.append(("rearrangement_drift", [r["rearrangement_drift"] for r in traj.records]))
    return cols


def cmd_evolve(cfg):
    grid = sp.make_grid(cfg.n)
    sol = _steady_state(cfg, grid)
    ctrl = StepControl(t_end=_t_end(cfg, sol), cfl=cfg.cfl, record_every=10)
    s_values = tuple(cfg.norm_s)
    traj = evolve(sol.omega, ctrl, s_values=s_values)
    out = _outdir(cfg)
    cols = _evolve_rows(traj, s_values)
    io.write_csv(out / "trajectory.csv", cols, cfg.echo())
    io.write_field(out / "omega_final.field", sp.inverse(traj.final.omega))
    named = dict(cols)
    e_drift = max(abs(x) for x in named["energy_drift"])
    s_drift = max(abs(x) for s in s_values for x in named[f"ls_drift_L{s:g}"])
    print(f"t_end={io.fmt(traj.final.t)} steps={traj.steps} "
          f"max_energy_drift={e_drift:.3e} max_ls_drift={s_drift:.3e}")
    if e_drift > ENERGY_DRIFT_TOL or s_drift > LS_DRIFT_TOL:
        raise CommandFailed(f"conservation audit energy_drift={e_drift:.3e} "
                            f"ls_drift={s_drift:.3e}")


def cmd_stability(cfg):
    grid = sp.make_grid(cfg.n)
    sol = _steady_state(cfg, grid)
    pert = st.Perturbation(cfg.pert_kind, cfg.delta, cfg.norm_s[0], cfg.seed,
                           cfg.constrain_to_Sp)
    ctrl = StepControl(t_end=_t_end(cfg, sol), cfl=cfg.cfl)
    report = st.run_experiment(sol, pert, ctrl, norms=cfg.norm_s,
                               config={"resolved": cfg.echo()})
    out = _outdir(cfg)
    io.write_report(report, out / "report.csv")
    s0 = cfg.norm_s[0]
    print(f"delta={io.fmt(cfg.delta)} sup_dist_L{s0:g}={io.fmt(report.sup(s0))} "
          f"sup_dist_E={io.fmt(report.sup('E'))} valid={report.valid}")
    if not report.complete:
        raise CommandFailed("evolution blew up; partial report written")
    if not report.valid:
        raise CommandFailed("conserved-quantity drift above tolerance; report flagged invalid")


def cmd_spectrum(cfg, fields=()):
    grid = sp.make_grid(cfg.n)
    lam1, phi1 = le.principal_eigenpair(grid)
    wstar, e1 = le.maximize_energy_ball(1.0, grid, _opts(cfg))
    out = _outdir(cfg)
    names, ratios = ["phi1", "ball_maximizer"], [2 * lam1 * sp.energy(sp.forward(phi1)),
                                                  2 * lam1 * e1]
    rng = np.random.default_rng(cfg.seed)
    samples = [(str(path), io.read_field(path)) for path in fields]
    if not samples:
        samples = [(f"random_{k}", sp.inverse(sp.random_bandlimited(grid, rng))) for k in range(4)]
    for name, f in samples:
        norm2 = sp.integral_abs_power(f, 2.0)
        names.append(name)
        ratios.append(2 * lam1 * sp.energy(sp.forward(f)) / norm2)
    lines = [f"# {k}={v}" for k, v in cfg.echo().items()]
    lines += ["name,two_lambda1_E_over_L2sq"] + [f"{a},{io.fmt(b)}" for a, b in zip(names, ratios)]
    (out / "spectrum.csv").write_text("\n".join(lines) + "\n")
    print(f"lambda_1={io.fmt(lam1)} e1={io.fmt(e1)}")
    for a, b in zip(names, ratios):
        print(f"{a}: 2*lambda_1*E/||w||^2 = {io.fmt(b)}")
    bad = [a for a, b in zip(names, ratios) if b > 1.0 + 1e-12]
    if bad:
        raise CommandFailed(f"bound violated by {','.join(bad)}")


def verification_checks(p, n, tol=1e-10, seed=0):
    """The identity suite as (name, value, tolerance, passed) rows."""
    grid = sp.make_grid(n)
    rng = np.random.default_rng(seed)
    rows = []

    def add(name, value, tolerance, passed=None):
        ok = value <= tolerance if passed is None else passed
        rows.append((name, float(value), float(tolerance), bool(ok)))

    worst_g = worst_sa = worst_pv = 0.0
    for _ in range(10):
        w = sp.random_bandlimited(grid, rng)
        v = sp.random_bandlimited(grid, rng)
        back = sp.inverse(sp.neg_laplacian(sp.green(w))).values
        wn = sp.inverse(w).values
        worst_g = max(worst_g, np.max(np.abs(back - wn)) / np.max(np.abs(wn)))
        lhs = sp.inner(sp.inverse(v), sp.inverse(sp.green(w)))
        rhs_ = sp.inner(sp.inverse(sp.green(v)), sp.inverse(w))
        worst_sa = max(worst_sa, abs(lhs - rhs_) / max(abs(lhs), 1e-300))
        worst_pv = max(worst_pv, abs(sp.lp_norm(sp.inverse(w), 2) ** 2 - np.sum(w.coeffs**2))
                       / np.sum(w.coeffs**2))
    add("green_exactness", worst_g, 1e-10)
    add("self_adjointness", worst_sa, 1e-12)
    add("parseval", worst_pv, 1e-10)

    opts = le.SolverOptions(tol=tol)
    sol = le.solve_ground_state(p, grid, opts)
    add("ground_state_residual", sol.residual, tol)
    add("nehari_deficit", sol.nehari_deficit, 1e-10 * max(1.0, sp.dirichlet_integral(sp.forward(sol.u))))
    mu_cce = (2 * sol.c_p * (p + 1) / (p - 1)) ** (p / (p + 1))
    add("cce_mu_identity", abs(sol.mu_p - mu_cce) / mu_cce, 1e-6)
    diag = le.diagnostics(sol.u, p)
    add("rayleigh_negative", diag.rayleigh_check, 0.0, diag.rayleigh_check < 0)
    expected = (1 - p) * sp.integral_abs_power(sol.u, p + 1)
    add("rayleigh_identity", abs(diag.rayleigh_check - expected) / abs(expected), 1e-6)

    wstar, e1 = le.maximize_energy_ball(p, grid, le.SolverOptions(tol=1e-12))
    add("maximizer_sign_definite", 0.0, 0.0,
        bool(np.all(wstar.values > 0) or np.all(wstar.values < 0)))
    consts = le.derive_constants(p, sol.c_p, e1)
    M_ball = sol.mu_p**2 * e1
    target = sol.mu_p ** (1 + 1 / p)
    add("mass_identity_2M_mu", abs(2 * M_ball - target) / target, 1e-3)
    add("two_route_mu", abs(consts.mu_from_cp - consts.mu_from_e1) / consts.mu_from_cp, 1e-3)

    _, e1_lin = le.maximize_energy_ball(1.0, grid, le.SolverOptions(tol=1e-13))
    add("p1_closed_form_e1", abs(e1_lin - 0.25), 1e-8)
    return rows


def cmd_verify(cfg):
    rows = verification_checks(cfg.p, cfg.n, cfg.tol, cfg.seed)
    out = _outdir(cfg)
    lines = [f"# {k}={v}" for k, v in cfg.echo().items()]
    lines.append("check,value,tolerance,pass")
    lines += [f"{name},{io.fmt(v)},{io.fmt(t)},{int(ok)}" for name, v, t, ok in rows]
    (out / "verify.csv").write_text("\n".join(lines) + "\n")
    for name, v, t, ok in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {v:.3e} (tol {t:.1e})")
    failed = [name for name, _, _, ok in rows if not ok]
    if failed:
        raise CommandFailed(f"checks={','.join(failed)}")


DISPATCH = {
    "ground-state": cmd_ground_state,
    "maximize": cmd_maximize,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "spectrum":
            cmd_spectrum(cfg, args.fields)
        else:
            DISPATCH[args.command](cfg)
    except (io.ParseError, io.ValidationError, io.FormatError) as exc:
        print(f"status=fail command={args.command} error={type(exc).__name__} "
              f"detail={str(exc)!r}", file=sys.stderr)
        return 2
    except (CommandFailed, le.NonConvergence, Blowup) as exc:
        print(f"status=fail command={args.command} error={type(exc).__name__} "
              f"detail={str(exc)!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
