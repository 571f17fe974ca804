"""Command-line interface.

Subcommands mirror the library layers: ``model fd`` and ``jamiton ...``
emit closed-form curves and exact wave profiles, ``simulate`` runs the
finite-volume solver from a config file, ``estimate`` and
``accuracy-table`` post-process runs, and the ``collide`` family drives
the collision experiments.  All CSV schemas are documented in README.md.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from jamlab import analysis, collision, jamiton, model, solver
from jamlab.model import ModelParams, read_config
from jamlab.solver import GridConfig


def _load_params(args, tau=None) -> ModelParams:
    p = ModelParams.from_file(args.params) if getattr(args, "params", None) else ModelParams()
    if tau is None:
        tau = getattr(args, "tau", None)
    return p.with_tau(tau) if tau is not None else p


def _add_params_opt(sub):
    sub.add_argument("--params", help="model parameter file (key = value lines)")


# -- model --------------------------------------------------------------------

def cmd_model_fd(args):
    p = _load_params(args)
    rho = np.linspace(0.0, p.rho_max, args.n)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "Q_smooth", "Q_nd", "Q_greenshields"])
        for r in rho:
            writer.writerow([r, model.flow_Q(r, p), model.nd_flow(r, p),
                             model.greenshields_flow(r, p)])
    print(f"wrote {args.n} flow samples to {args.out}")


# -- jamiton ------------------------------------------------------------------

def cmd_jamiton_construct(args):
    p = _load_params(args)
    son = jamiton.sonic_data(args.rho_s * p.rho_max, p)
    spec = jamiton.make_spec(son, args.v_minus)
    prof = jamiton.integrate_profile(spec, args.samples)
    with open(args.out, "w", newline="") as fh:
        fh.write(f"# m,{son.m!r}\n# s,{son.s!r}\n")
        fh.write(f"# L,{prof.L!r}\n# N,{prof.N_veh!r}\n# A,{prof.A!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["x", "v", "rho", "u"])
        for row in zip(prof.x, prof.v, prof.rho, prof.u):
            writer.writerow(row)
    print(f"rho_s/rho_max = {args.rho_s}, v_minus = {args.v_minus}: "
          f"m = {son.m:.6g}, s = {son.s:.6g}, L = {prof.L:.6g}, "
          f"N = {prof.N_veh:.6g}, A = {prof.A:.6g} -> {args.out}")


def cmd_jamiton_fd(args):
    p = _load_params(args)
    env = jamiton.envelopes(p, n=args.n)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho_s", "m", "s", "rho_M", "q_M", "rho_R", "q_R",
                         "rho_star", "q_star", "skipped"])
        for i in range(env.rho_s.size):
            writer.writerow([env.rho_s[i], env.m[i], env.s[i], env.rho_M[i],
                             env.q_M[i], env.rho_R[i], env.q_R[i],
                             env.rho_star[i], env.q_star[i], int(env.skipped[i])])
    print(f"wrote {args.n} maximal segments + envelope points to {args.out}")


# -- simulate -------------------------------------------------------------------

_SIM_KEYS = {"ic", "rho_s", "rho_s_2", "v_minus", "n_cells", "cfl", "tau",
             "t_final", "snapshot_stride", "rho_bar", "amp", "center", "width",
             "domain_length"}


def _build_ic(cfg: dict, p: ModelParams):
    kind = cfg.get("ic", "jamiton")
    if kind == "jamiton":
        spec = jamiton.make_spec(
            jamiton.sonic_data(cfg["rho_s"] * p.rho_max, p), cfg["v_minus"])
        prof = jamiton.integrate_profile(spec)
        return prof.L, jamiton.profile_sampler(prof)
    if kind == "gaussian":
        if "domain_length" not in cfg:
            raise ValueError("gaussian IC requires a domain_length key")
        ic = solver.gaussian_ic(p, cfg["rho_bar"], cfg["amp"], cfg["center"],
                                cfg["width"])
        return cfg["domain_length"], ic
    if kind == "two-jamiton":
        spec_a = jamiton.make_spec(
            jamiton.sonic_data(cfg["rho_s"] * p.rho_max, p), cfg["v_minus"])
        spec_b = jamiton.make_spec(
            jamiton.sonic_data(cfg["rho_s_2"] * p.rho_max, p), cfg["v_minus"])
        return collision.two_jamiton_ic(spec_a, spec_b, p)
    raise ValueError(f"unknown ic kind {kind!r}")


def write_trajectory(traj, grid: GridConfig, p: ModelParams, path):
    x = grid.cell_centers()
    with open(path, "w", newline="") as fh:
        for t, state in zip(traj.times, traj.states):
            _, u = solver.from_conservative(state.rho, state.y, p)
            fh.write(f"t,{float(t)!r}\n")
            fh.write("x,rho,u\n")
            for xi, ri, ui in zip(x, state.rho, u):
                fh.write(f"{float(xi)!r},{float(ri)!r},{float(ui)!r}\n")
            fh.write("\n")


def read_trajectory(path):
    """Yield (t, x, rho, u) blocks from a trajectory CSV."""
    blocks = []
    with open(path) as fh:
        t = None
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("t,"):
                if t is not None and rows:
                    blocks.append((t, *map(np.array, zip(*rows))))
                t = float(line.split(",", 1)[1])
                rows = []
            elif line != "x,rho,u":
                rows.append(tuple(float(v) for v in line.split(",")))
        if t is not None and rows:
            blocks.append((t, *map(np.array, zip(*rows))))
    return blocks


def cmd_simulate(args):
    cfg = read_config(args.config, allowed=_SIM_KEYS)
    p = _load_params(args, tau=cfg.get("tau"))
    domain_length, ic = _build_ic(cfg, p)
    grid = GridConfig(
        n_cells=int(cfg.get("n_cells", 160)),
        domain_length=domain_length,
        t_final=float(cfg.get("t_final", 2.0)),
        cfl=float(cfg.get("cfl", 0.5)),
    )
    stride = int(cfg.get("snapshot_stride", 0)) or None
    traj = solver.run(ic, grid, p, record_stride=stride)
    write_trajectory(traj, grid, p, args.out)
    print(f"{len(traj.times)} snapshots (t_final = {traj.times[-1]:.6g}) -> {args.out}")


def cmd_estimate(args):
    blocks = read_trajectory(args.infile)
    if not blocks:
        sys.exit(f"no snapshots in {args.infile}")
    times = np.array([b[0] for b in blocks])
    i = int(np.argmin(np.abs(times - args.t)))
    t, x, rho, u = blocks[i]
    p = _load_params(args)
    est = analysis.estimate_speed(rho, u, p, trim=args.trim)
    print(f"t = {t:.6g} (requested {args.t:.6g})")
    print(f"s_est = {est.s_est:.10g}")
    print(f"m_est = {est.m_est:.10g}")
    print(f"rho_s_est = {est.rho_s_est:.10g}")
    print(f"residual_rms = {est.residual_rms:.4e}")


# -- accuracy tables -------------------------------------------------------------

def accuracy_sweep(p: ModelParams, rho_s_frac: float, v_minus: float,
                   n_cells_list, taus, t_finals, trim: int = 2):
    """Error sweep against the exact translated wave; one row per (N, tau, t)."""
    rows = []
    for tau in taus:
        p_tau = p.with_tau(tau)
        spec = jamiton.make_spec(
            jamiton.sonic_data(rho_s_frac * p_tau.rho_max, p_tau), v_minus)
        prof = jamiton.integrate_profile(spec, 8192)
        sonic = spec.sonic
        reference = analysis.jamiton_reference(prof)
        ic = jamiton.profile_sampler(prof)
        for t_final in t_finals:
            for n in n_cells_list:
                grid = GridConfig(n_cells=n, domain_length=prof.L, t_final=t_final)
                traj = solver.run(ic, grid, p_tau)
                state = traj.final()
                eps_rho, eps_u = analysis.rel_l1_error(state, grid, p_tau, reference)
                est = analysis.estimate_from_state(state, grid, p_tau, trim=trim)
                eps_s, eps_m = analysis.speed_errors(est, sonic)
                drift = abs(solver.vehicle_count(state, grid)
                            - solver.vehicle_count(traj.states[0], grid))
                drift /= solver.vehicle_count(traj.states[0], grid)
                rows.append(dict(n_cells=n, tau=tau, t_final=t_final,
                                 eps_rho=eps_rho, eps_u=eps_u,
                                 eps_s=eps_s, eps_m=eps_m, mass_drift=drift))
    return rows


def cmd_accuracy_table(args):
    p = _load_params(args)
    n_list = [n for n in (20, 40, 80, 160, 320, 640, 1280, 2560) if n <= args.max_n]
    taus = [float(v) for v in args.taus.split(",")]
    t_finals = [float(v) for v in args.t_finals.split(",")]
    rows = accuracy_sweep(p, args.rho_s, args.v_minus, n_list, taus, t_finals)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"{len(rows)} sweep rows -> {args.out}")


# -- collisions -------------------------------------------------------------------

def cmd_collide(args):
    p = _load_params(args)
    if args.rho_s_test is None or args.v_minus is None:
        rho_s_test, v_minus = collision.choose_test_jamiton(p)
        if args.rho_s_test is not None:
            rho_s_test = args.rho_s_test * p.rho_max
        if args.v_minus is not None:
            v_minus = args.v_minus
    else:
        rho_s_test, v_minus = args.rho_s_test * p.rho_max, args.v_minus
    spec_test = jamiton.make_spec(jamiton.sonic_data(rho_s_test, p), v_minus)
    spec_other = jamiton.make_spec(
        jamiton.sonic_data(args.rho_s_other * p.rho_max, p), v_minus)
    rec = collision.run_collision(spec_test, spec_other, p, n_cells=args.cells)
    collision.write_records_csv([rec], args.out)
    print(f"status = {rec.status}, s_out = {rec.s_out:.6g}, "
          f"L_out = {rec.L_out:.6g}, E_L = {rec.E_L:.3e} -> {args.out}")


def cmd_batch_collide(args):
    p = _load_params(args)
    rho_s_test, v_minus = collision.choose_test_jamiton(p)
    cset = collision.compatible_densities(v_minus, p, n_scan=args.n_scan,
                                          rho_s_test=rho_s_test)
    picks = collision.select_candidates(cset, args.candidates)
    records = collision.batch_collide(cset, p, candidates=picks,
                                      n_cells=args.cells, workers=args.workers)
    collision.write_records_csv(records, args.out)
    settled = sum(1 for r in records if r.status == "settled")
    print(f"{len(records)} collisions ({settled} settled) -> {args.out}")


def cmd_sweep_tau(args):
    p = _load_params(args)
    taus = [float(v) for v in args.taus.split(",")]
    rho_s_test, v_minus = collision.choose_test_jamiton(p)
    cset = collision.compatible_densities(v_minus, p, n_scan=args.n_scan,
                                          rho_s_test=rho_s_test)
    picks = collision.select_candidates(cset, args.candidates)
    sweep = collision.tau_sweep(cset, p, taus=taus, candidates=picks,
                                n_cells=args.cells, workers=args.workers)
    records = [rec for tau in taus for rec in sweep[tau]]
    collision.write_records_csv(records, args.out)
    print(f"{len(records)} collisions over taus {taus} -> {args.out}")


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jamlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser("model", help="fundamental-diagram closures")
    model_sub = p_model.add_subparsers(dest="subcommand", required=True)
    p_fd = model_sub.add_parser("fd", help="flow comparison CSV")
    p_fd.add_argument("--out", required=True)
    p_fd.add_argument("--n", type=int, default=512)
    _add_params_opt(p_fd)
    p_fd.set_defaults(func=cmd_model_fd)

    p_jam = sub.add_parser("jamiton", help="exact traveling waves")
    jam_sub = p_jam.add_subparsers(dest="subcommand", required=True)
    p_con = jam_sub.add_parser("construct", help="construct one wave profile")
    p_con.add_argument("--rho-s", type=float, required=True, dest="rho_s",
                       help="sonic density as a fraction of rho_max")
    p_con.add_argument("--v-minus", type=float, required=True, dest="v_minus")
    p_con.add_argument("--samples", type=int, default=1024)
    p_con.add_argument("--tau", type=float, default=None)
    p_con.add_argument("--out", required=True)
    _add_params_opt(p_con)
    p_con.set_defaults(func=cmd_jamiton_construct)
    p_jfd = jam_sub.add_parser("fd", help="maximal segments and envelopes")
    p_jfd.add_argument("--out", required=True)
    p_jfd.add_argument("--n", type=int, default=64)
    _add_params_opt(p_jfd)
    p_jfd.set_defaults(func=cmd_jamiton_fd)

    p_sim = sub.add_parser("simulate", help="finite-volume run from a config file")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    _add_params_opt(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="(m, s) regression from a trajectory")
    p_est.add_argument("--in", required=True, dest="infile")
    p_est.add_argument("--t", type=float, required=True)
    p_est.add_argument("--trim", type=int, default=2)
    _add_params_opt(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_acc = sub.add_parser("accuracy-table", help="error sweeps vs the exact wave")
    p_acc.add_argument("--out", required=True)
    p_acc.add_argument("--rho-s", type=float, default=0.433, dest="rho_s")
    p_acc.add_argument("--v-minus", type=float, default=26.0, dest="v_minus")
    p_acc.add_argument("--max-n", type=int, default=2560, dest="max_n")
    p_acc.add_argument("--taus", default="1,5,10")
    p_acc.add_argument("--t-finals", default="0.5,2", dest="t_finals")
    _add_params_opt(p_acc)
    p_acc.set_defaults(func=cmd_accuracy_table)

    p_col = sub.add_parser("collide", help="one collision against the test wave")
    p_col.add_argument("--rho-s-other", type=float, required=True, dest="rho_s_other")
    p_col.add_argument("--rho-s-test", type=float, default=None, dest="rho_s_test")
    p_col.add_argument("--v-minus", type=float, default=None, dest="v_minus")
    p_col.add_argument("--cells", type=int, default=160)
    p_col.add_argument("--tau", type=float, default=None)
    p_col.add_argument("--out", required=True)
    _add_params_opt(p_col)
    p_col.set_defaults(func=cmd_collide)

    p_bat = sub.add_parser("batch-collide", help="collide a candidate sweep")
    p_bat.add_argument("--candidates", type=int, default=24)
    p_bat.add_argument("--workers", type=int, default=1)
    p_bat.add_argument("--cells", type=int, default=160)
    p_bat.add_argument("--n-scan", type=int, default=200, dest="n_scan")
    p_bat.add_argument("--tau", type=float, default=None)
    p_bat.add_argument("--out", required=True)
    _add_params_opt(p_bat)
    p_bat.set_defaults(func=cmd_batch_collide)

    p_swp = sub.add_parser("sweep-tau", help="repeat the batch across taus")
    p_swp.add_argument("--taus", default="1,5,10")
    p_swp.add_argument("--candidates", type=int, default=6)
    p_swp.add_argument("--workers", type=int, default=1)
    p_swp.add_argument("--cells", type=int, default=160)
    p_swp.add_argument("--n-scan", type=int, default=200, dest="n_scan")
    p_swp.add_argument("--out", required=True)
    _add_params_opt(p_swp)
    p_swp.set_defaults(func=cmd_sweep_tau)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
