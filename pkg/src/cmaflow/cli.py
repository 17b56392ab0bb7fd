"""Command line front end.

Subcommands: solve, elliptic, converge, barriers, regularize, admissible,
analyze.  Each takes --config (TOML), --out (output directory) and --seed.
Exit codes: 0 when the run's property checks pass, 2 when a property fails,
1 on errors (bad input, solver breakdown).
"""

from __future__ import annotations

import argparse
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from . import analysis, barriers, elliptic, regularization, verify
from .admissibility import find_witness, verify_witness, zero_set_mass
from .config import (build_problem, build_scheme, elliptic_config, load_config,
                     solver_config)
from .domain import GridFunction
from .errors import CmaflowError, NoWitnessFound
from .io_csv import write_node_csv, write_report, write_table
from .parabolic import solve as parabolic_solve

PASS, FAIL, ERROR = 0, 2, 1


def _setup(args):
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scheme = build_scheme(cfg, seed=args.seed)
    return cfg, out, scheme


def cmd_solve(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    pcfg = solver_config(cfg)
    traj = parabolic_solve(data, scheme, pcfg)
    for i, snap in enumerate(traj.snapshots):
        write_node_csv(out / f"snapshot_{i:03d}.csv", snap)
    rep = traj.report
    exact = extras.get("exact")
    rows = []
    for i, snap in enumerate(traj.snapshots):
        err = (float(np.max(np.abs(snap.values - exact(snap.t, scheme.grid.pos))))
               if exact else "")
        ch = float(rep.sup_change[np.searchsorted(rep.times, snap.t)]) \
            if i > 0 and rep.times.size else 0.0
        rows.append([float(snap.t), ch, err])
    write_table(out / "plot.csv", ["t", "sup_change", "sup_error_vs_reference"],
                rows)
    ok = len(rep.bound_violations) == 0
    final_err = rows[-1][2] if exact else None
    if exact and final_err > 5.0 * scheme.h:
        ok = False
    write_report(out / "run_report.txt", {
        "steps": rep.steps,
        "reached_steady": rep.reached_steady,
        "final_sup_change": float(rep.sup_change[-1]) if rep.steps else 0.0,
        "total_clamps": int(np.sum(rep.clamp_counts)),
        "bound_violations": len(rep.bound_violations),
        "final_error_vs_reference": final_err,
        "ok": ok,
    }, title=f"solve {data.name}")
    return PASS if ok else FAIL


def cmd_elliptic(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    if "limit" not in extras:
        raise CmaflowError(f"problem {data.name} has no elliptic limit")
    prob = extras["limit"]
    ecfg = elliptic_config(cfg)
    u_fix = elliptic.solve_dirichlet_ma(prob, scheme, ecfg)
    u_per = elliptic.perron_envelope(prob, scheme, ecfg,
                                     elliptic.elliptic_lower_bound(prob, scheme))
    write_node_csv(out / "fixed_point.csv", u_fix)
    write_node_csv(out / "perron.csv", u_per)
    gap = float(np.max(np.abs(u_fix.values - u_per.values)))
    tol = cfg.get("elliptic", {}).get("agree_tol", 10.0 * scheme.h)
    ok = gap <= tol
    write_report(out / "elliptic_report.txt",
                 {"cross_solver_gap": gap, "tol": tol, "ok": ok},
                 title=f"elliptic {prob.name}")
    return PASS if ok else FAIL


def cmd_converge(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    if "limit" not in extras:
        raise CmaflowError(f"problem {data.name} has no elliptic limit")
    pcfg = solver_config(cfg)
    block = cfg.get("converge", {})
    burn_in = float(block.get("burn_in", 1.0))
    rep = elliptic.long_time_convergence(data, extras["limit"], scheme, pcfg,
                                         elliptic_config(cfg), burn_in=burn_in)
    write_table(out / "convergence.csv", ["t", "e"],
                [[float(t), float(e)] for t, e in zip(rep["t"], rep["e"])])
    target = math.exp(-pcfg.T) + 10.0 * scheme.h
    ok = rep["monotone_after_burn_in"] and rep["e_final"] <= target
    write_report(out / "convergence_report.txt", {
        "e_final": rep["e_final"], "target": target,
        "monotone_after_burn_in": rep["monotone_after_burn_in"], "ok": ok,
    }, title=f"converge {data.name}")
    return PASS if ok else FAIL


def cmd_barriers(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    block = cfg.get("barriers", {})
    T = float(block.get("T", min(data.horizon, 1.0)))
    eps = float(block.get("eps", 0.25))
    times = [float(t) for t in block.get("times", [0.25 * T, 0.5 * T, 0.75 * T])]
    pair = barriers.make_barrier_pair(data, scheme, eps, T)
    g = scheme.grid
    for i, t in enumerate(times):
        write_node_csv(out / f"subbarrier_{i:03d}.csv",
                       GridFunction(g, np.asarray(pair.sub(t, g.pos), float), t))
        write_node_csv(out / f"superbarrier_{i:03d}.csv",
                       GridFunction(g, np.asarray(pair.super_(t, g.pos), float), t))
    ts = np.linspace(0.05 * T, 0.95 * T, 9)
    rs = verify.subsolution_sweep(pair.sub, data, scheme, ts)
    rv = verify.supersolution_sweep(pair.super_, data, scheme, ts)
    ok = rs.ok and rv.ok
    write_report(out / "barrier_report.txt", {
        "eps": eps, "T": T,
        "sub_max_defect": rs.max_defect, "super_max_defect": rv.max_defect,
        "tol": rs.tol, "ok": ok,
    }, title=f"barriers {data.name}")
    return PASS if ok else FAIL


def cmd_regularize(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    pcfg = solver_config(cfg)
    traj = parabolic_solve(data, scheme, pcfg)
    prof = regularization.from_trajectory(traj)
    k = float(cfg.get("regularize", {}).get("k", 8.0))
    up = regularization.sup_convolution(prof, k)
    lo = regularization.inf_convolution(prof, k)
    write_table(out / "profiles.csv", ["t", "sup_u", "sup_conv", "inf_conv"],
                [[float(t), float(np.max(prof.values[i])),
                  float(np.max(up.values[i])), float(np.max(lo.values[i]))]
                 for i, t in enumerate(prof.times)])
    lrep = regularization.time_lipschitz_bound(traj, data, n=scheme.n,
                                               tol=10.0 * scheme.h)
    ok = lrep["violations"] == 0
    write_report(out / "lipschitz_report.txt", {
        "k": k, "M": lrep["M"], "n_pairs": lrep["n_pairs"],
        "violations": lrep["violations"], "ok": ok,
    }, title=f"regularize {data.name}")
    return PASS if ok else FAIL


def cmd_admissible(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    eps = float(cfg.get("admissible", {}).get("eps", 0.5))
    u0 = scheme.sample(data.u0)
    f0 = lambda pts: data.f(0.0, pts)
    mass = zero_set_mass(u0, f0, scheme)
    try:
        w = find_witness(u0, f0, eps, scheme)
    except NoWitnessFound as exc:
        write_report(out / "admissible_report.txt", {
            "verdict": "inconclusive", "eps": eps,
            "zero_set_mass": exc.residual_mass, "c_cap": exc.c_cap,
        }, title=f"admissible {data.name}")
        return FAIL
    check = verify_witness(w, u0, f0, scheme)
    write_node_csv(out / "witness.csv", w.u_eps)
    write_report(out / "admissible_report.txt", {
        "verdict": "witnessed" if check["ok"] else "witness_rejected",
        "eps": eps, "C_eps": w.C_eps, "zero_set_mass": mass,
        "check": check,
    }, title=f"admissible {data.name}")
    return PASS if check["ok"] else FAIL


def cmd_analyze(args) -> int:
    cfg, out, scheme = _setup(args)
    data, extras = build_problem(cfg)
    pcfg = solver_config(cfg)
    traj = parabolic_solve(data, scheme, pcfg)
    block = cfg.get("analyze", {})
    direction = block.get("direction", "time")
    target = float(block.get("target",
                             extras.get("alpha" if direction == "time"
                                        else "beta", 0.5)))
    rep = analysis.holder_modulus(traj, direction, target, seed=args.seed)
    write_report(out / "modulus_report.txt", {
        "direction": rep.direction, "exponent": rep.exponent,
        "constant": rep.constant, "n_pairs": rep.n_pairs,
        "residual": rep.residual, "target": rep.target,
        "passed": rep.passed,
    }, title=f"analyze {data.name}")
    prof = regularization.from_trajectory(traj)
    write_table(out / "sweep.csv", ["t", "sup_u", "inf_u"],
                [[float(t), float(np.max(prof.values[i])),
                  float(np.min(prof.values[i]))]
                 for i, t in enumerate(prof.times)])
    return PASS if rep.passed else FAIL


COMMANDS = {
    "solve": cmd_solve,
    "elliptic": cmd_elliptic,
    "converge": cmd_converge,
    "barriers": cmd_barriers,
    "regularize": cmd_regularize,
    "admissible": cmd_admissible,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmaflow",
                                description="Parabolic complex MA flows on "
                                            "pseudoconvex domains")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__)
        sp.add_argument("--config", required=True, help="TOML run config")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CmaflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR
    except Exception:
        traceback.print_exc()
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
