"""Elliptic Dirichlet MA solvers: damped fixed point and Perron envelope.

The elliptic problem MA(u) = e^{F(z,u)} f(z) with Dirichlet data phi is the
stationary limit of the parabolic flow.  Two independent solvers are provided
so each can serve as the other's oracle, plus the maximal psh extension
(MA = 0 envelope), a GKZ-type smallness probe, and the long-time convergence
harness for the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import GridFunction
from .errors import ConvergenceStalled, DegenerateDensity, NotConverged
from .parabolic import SolverConfig, Trajectory, solve as parabolic_solve
from .scheme import Scheme


@dataclass
class EllipticProblem:
    F: Callable  # (pts, r) -> values, non-decreasing in r
    f: Callable  # (pts) -> values >= 0
    phi: Callable  # (pts on the analytic boundary) -> values
    name: str = "elliptic"


@dataclass
class EllipticConfig:
    sigma0: float = 0.3
    eps_ma: float = 1e-12
    eps_f: float = 0.0
    residual_target: float = 1e-6
    max_iters: int = 400_000
    ordering: str = "gauss_seidel"  # or "red_black", "jacobi"
    gs_block: int = 64  # nodes per sequential Gauss-Seidel block
    sweep_tol: float = 1e-9
    max_sweeps: int = 5000
    bisect_iters: int = 40


def _band_vals(grid, u_vals: np.ndarray, phi: Callable) -> np.ndarray:
    pb, nbr, pn, ratio = grid.band_geometry()
    phi_b = np.asarray(phi(pb), float)
    phi_n = np.asarray(phi(pn), float)
    return phi_b + (u_vals[nbr] - phi_n) * ratio


def boundary_extremes(prob: EllipticProblem, scheme: Scheme):
    pb, _, _, _ = scheme.grid.band_geometry()
    phi_b = np.asarray(prob.phi(pb), float)
    return float(np.min(phi_b)), float(np.max(phi_b))


def elliptic_lower_bound(prob: EllipticProblem, scheme: Scheme) -> GridFunction:
    """Psh subsolution start: min(phi) + M s rho with MA(M s rho) >= e^F f."""
    g = scheme.grid
    rho_gf = GridFunction(g, g.rho.copy())
    ma_rho = scheme.ma(rho_gf)
    min_ma_rho = max(float(np.min(ma_rho)), 1e-12)
    phi_lo, phi_hi = boundary_extremes(prob, scheme)
    sup_f = float(np.max(np.asarray(prob.f(g.pos), float))) + scheme.eps_f
    sup_F = float(np.max(np.asarray(
        prob.F(g.pos, np.full(g.n_nodes, phi_hi)), float)))
    n = scheme.n
    M = np.exp(max(sup_F, 0.0) / n)
    s = (sup_f / min_ma_rho) ** (1.0 / n) if sup_f > 0 else 0.0
    return GridFunction(g, phi_lo + M * s * g.rho)


def solve_dirichlet_ma(prob: EllipticProblem, scheme: Scheme,
                       cfg: Optional[EllipticConfig] = None,
                       init: Optional[GridFunction] = None) -> GridFunction:
    """Damped fixed point of u <- u + sigma [log MA - log f - F], Dirichlet band.

    sigma = sigma0 h^2 / (1 + scale): the log-MA map has slope ~ 1/h^2 in each
    node value, so the damping must carry the h^2 or the iteration diverges.
    """
    cfg = cfg or EllipticConfig()
    g = scheme.grid
    u = (init.copy() if init is not None else elliptic_lower_bound(prob, scheme))
    vals = u.values
    vals[g.band] = _band_vals(g, vals, prob.phi)
    pts = g.pos[g.interior]
    fval = np.asarray(prob.f(pts), float) + cfg.eps_f
    if np.any(fval <= 0.0):
        raise DegenerateDensity("f + eps_f vanishes; use a positive eps_f")
    log_f = np.log(fval)
    sigma0 = cfg.sigma0
    res_ref = np.inf
    check = 10_000
    for it in range(cfg.max_iters):
        ma = scheme.ma(GridFunction(g, vals))
        Fval = np.asarray(prob.F(pts, vals[g.interior]), float)
        log_ma = np.log(np.maximum(ma, cfg.eps_ma))
        r = log_ma - log_f - Fval
        res = float(np.max(np.abs(r)))
        if res <= cfg.residual_target:
            return GridFunction(g, vals)
        if it and it % check == 0:
            # a residual that stopped shrinking means the step size sits on
            # a limit cycle; halve the damping and try again
            if res >= 0.99 * res_ref:
                sigma0 *= 0.5
            res_ref = res
        scale = float(np.max(np.abs(log_ma)) + np.max(np.abs(Fval)))
        sigma = sigma0 * scheme.h ** 2 / (1.0 + scale)
        vals = vals.copy()
        vals[g.interior] += sigma * r
        vals[g.band] = _band_vals(g, vals, prob.phi)
    raise NotConverged(f"residual {res:.3e} > {cfg.residual_target:.3e} "
                       f"after {cfg.max_iters} iterations")


def _probe_sums(scheme: Scheme, vals: np.ndarray) -> np.ndarray:
    """Sum of the 4 stencil probes per (frame, direction, interior node)."""
    g = scheme.grid
    fr = scheme.frames
    out = np.empty((fr.K, fr.n, g.n_interior))
    for k, frame in enumerate(fr.frames):
        for j, d in enumerate(frame.dirs):
            s = np.zeros(g.n_interior)
            for off in (d.off_v, -d.off_v, d.off_iv, -d.off_iv):
                for comp, w in g.gather_plan(off):
                    s += w * vals[comp]
            out[k, j] = s
    return out


def _ma_from_sums(S: np.ndarray, center: np.ndarray, h: float,
                  penalty: float) -> np.ndarray:
    """MA at nodes given probe sums S (K, n, m) and center values (m,)."""
    D = (S - 4.0 * center) / (4.0 * h * h)
    pos = np.prod(np.maximum(D, 0.0), axis=1)
    neg = np.sum(np.maximum(-D, 0.0), axis=1)
    return np.min(pos - penalty * neg, axis=0)


def _raise_nodes(scheme: Scheme, S: np.ndarray, center: np.ndarray,
                 pts: np.ndarray, fval: np.ndarray, F: Callable,
                 hi: np.ndarray, iters: int) -> np.ndarray:
    """Largest c >= center keeping MA(c) >= e^{F(z,c)} f, by bisection.

    MA is non-increasing and the right side non-decreasing in the center
    value, so the feasible set is a half line and bisection is exact.
    """
    h, pen = scheme.h, scheme.penalty

    def feasible(c):
        rhs = np.exp(np.clip(np.asarray(F(pts, c), float), -700, 700)) * fval
        return _ma_from_sums(S, c, h, pen) >= rhs

    lo = center.copy()
    hi = hi.copy()
    ok_hi = feasible(hi)
    lo_is_ok = feasible(lo)
    # nodes whose current value is already infeasible stay put
    out = lo.copy()
    work = lo_is_ok & ~ok_hi
    out[lo_is_ok & ok_hi] = hi[lo_is_ok & ok_hi]
    if work.any():
        a = lo[work].copy()
        b = hi[work].copy()
        Sw = S[:, :, work]
        pw = pts[work]
        fw = fval[work]
        for _ in range(iters):
            mid = 0.5 * (a + b)
            rhs = np.exp(np.clip(np.asarray(F(pw, mid), float), -700, 700)) * fw
            good = _ma_from_sums(Sw, mid, h, pen) >= rhs
            a = np.where(good, mid, a)
            b = np.where(good, b, mid)
        out[work] = a
    return out


def perron_envelope(prob: EllipticProblem, scheme: Scheme,
                    cfg: Optional[EllipticConfig] = None,
                    lower: Optional[GridFunction] = None) -> GridFunction:
    """Upper envelope of discrete subsolutions below the Dirichlet data.

    Starting from a psh subsolution, each sweep raises node values to the
    largest level keeping the subsolution inequality; iterates are monotone
    non-decreasing and converge to the discrete solution.
    """
    cfg = cfg or EllipticConfig()
    g = scheme.grid
    u = (lower.copy() if lower is not None
         else elliptic_lower_bound(prob, scheme))
    vals = u.values
    vals[g.band] = _band_vals(g, vals, prob.phi)
    pts = g.pos[g.interior]
    fval = np.asarray(prob.f(pts), float) + cfg.eps_f
    _, phi_hi = boundary_extremes(prob, scheme)
    hi_all = np.full(g.n_interior, phi_hi + 1.0)
    hi_all = np.maximum(hi_all, vals[g.interior] + 1.0)
    if cfg.ordering == "red_black":
        lattice = g.node_flat[g.interior]
        coords = np.zeros(g.n_interior, dtype=np.int64)
        rem = lattice.copy()
        for s in g.strides:
            coords += rem // s
            rem = rem % s
        colors = [np.flatnonzero(coords % 2 == 0), np.flatnonzero(coords % 2 == 1)]
    elif cfg.ordering == "jacobi":
        colors = [np.arange(g.n_interior)]
    elif cfg.ordering == "gauss_seidel":
        # sequential index-order blocks; updated values feed the next block
        colors = [np.arange(a, min(a + cfg.gs_block, g.n_interior))
                  for a in range(0, g.n_interior, cfg.gs_block)]
    else:
        raise ValueError(f"unknown ordering {cfg.ordering!r}")
    for sweep in range(cfg.max_sweeps):
        before = vals.copy()
        vals[g.band] = _band_vals(g, vals, prob.phi)
        for idx in colors:
            S = _probe_sums(scheme, vals)[:, :, idx]
            c = _raise_nodes(scheme, S, vals[g.interior[idx]], pts[idx],
                             fval[idx], prob.F, hi_all[idx], cfg.bisect_iters)
            new = np.maximum(vals[g.interior[idx]], c)
            vals[g.interior[idx]] = new
        if float(np.max(np.abs(vals - before))) < cfg.sweep_tol:
            return GridFunction(g, vals)
    raise NotConverged(f"envelope not settled after {cfg.max_sweeps} sweeps")


def maximal_extension(psi: Callable, scheme: Scheme, tol: float = 1e-9,
                      max_iters: int = 200_000) -> GridFunction:
    """Discrete maximal psh function with boundary values psi.

    Interior update u <- min over directions of the 4-probe average: the
    fixed point has all directional curvatures >= 0 with equality in the
    minimizing direction, the discrete form of (dd^c u)^n = 0.  Iterating
    from a large constant descends monotonically to the envelope.
    """
    g = scheme.grid
    pb, _, pn, _ = g.band_geometry()
    psi_b = np.asarray(psi(pb), float)
    vals = np.full(g.n_nodes, float(np.max(psi_b)))
    dirs = list(scheme.frames.all_directions())
    for it in range(max_iters):
        vals[g.band] = _band_vals(g, vals, psi)
        best = None
        for d in dirs:
            s = np.zeros(g.n_interior)
            for off in (d.off_v, -d.off_v, d.off_iv, -d.off_iv):
                for comp, w in g.gather_plan(off):
                    s += w * vals[comp]
            s *= 0.25
            best = s if best is None else np.minimum(best, s)
        change = float(np.max(np.abs(best - vals[g.interior])))
        vals[g.interior] = best
        if change < tol:
            vals[g.band] = _band_vals(g, vals, psi)
            return GridFunction(g, vals)
    raise NotConverged(f"maximal extension change {change:.3e} > {tol:.3e}")


def gkz_stability_probe(scheme: Scheme, s_ladder: Sequence[float],
                        cfg: Optional[EllipticConfig] = None) -> dict:
    """sup|u| for MA(u) = s, u = 0 on the boundary, down a density ladder."""
    cfg = cfg or EllipticConfig()
    n = scheme.n
    sups, refs = [], []
    for s in s_ladder:
        if s == 0:
            sups.append(0.0)
            refs.append(0.0)
            continue
        prob = EllipticProblem(
            F=lambda pts, r: np.zeros(len(pts)),
            f=lambda pts, s=s: np.full(len(pts), float(s)),
            phi=lambda pts: np.zeros(len(pts)),
            name=f"gkz_s={s}",
        )
        u = solve_dirichlet_ma(prob, scheme, cfg)
        sups.append(float(np.max(np.abs(u.values))))
        refs.append(float(s) ** (1.0 / n))
    monotone = all(a >= b - 1e-12 for a, b in zip(sups, sups[1:]))
    return {"s": list(s_ladder), "sup_u": sups, "radial_ref": refs,
            "monotone_decreasing": monotone}


def long_time_convergence(data, limit: EllipticProblem, scheme: Scheme,
                          pcfg: SolverConfig,
                          ecfg: Optional[EllipticConfig] = None,
                          burn_in: float = 1.0,
                          eps_conv: Optional[float] = None,
                          monotone_slack: float = 1e-8) -> dict:
    """Run the flow to pcfg.T and measure e(t) = sup|u(t) - u_inf|."""
    u_inf = solve_dirichlet_ma(limit, scheme, ecfg or EllipticConfig())
    traj = parabolic_solve(data, scheme, pcfg)
    ts = traj.times
    errs = np.array([float(np.max(np.abs(s.values - u_inf.values)))
                     for s in traj.snapshots])
    late = ts >= burn_in
    e_late = errs[late]
    monotone = bool(np.all(np.diff(e_late) <= monotone_slack)) if e_late.size > 1 \
        else True
    final = float(errs[-1])
    if eps_conv is not None and final > eps_conv:
        raise ConvergenceStalled(f"e(T) = {final:.3e} > {eps_conv:.3e}")
    return {"t": ts, "e": errs, "e_final": final,
            "monotone_after_burn_in": monotone, "u_inf": u_inf,
            "trajectory": traj}
