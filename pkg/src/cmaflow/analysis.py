"""Property measurements: comparison ordering, shift comparison, Holder
moduli, and the restart (seam removability) test."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .admissibility import find_witness
from .domain import GridFunction, ProblemData, grid_projections
from .errors import InputsNotSubSuper, InsufficientData, NoDeltaFound
from .parabolic import SolverConfig, Trajectory, solve
from .scheme import Scheme
from .verify import subsolution_sweep, supersolution_sweep


@dataclass
class ModulusReport:
    exponent: float
    constant: float
    n_pairs: int
    residual: float
    target: float
    slack: float
    seed: int
    direction: str

    @property
    def passed(self) -> bool:
        return np.isfinite(self.exponent) and \
            self.exponent >= self.target * (1.0 - self.slack)


def comparison_test(u_sub: Callable, v_super: Callable, data, scheme: Scheme,
                    T: float, tol: Optional[float] = None,
                    n_times: int = 9, check_roles: bool = True) -> dict:
    """Interior max of (sub - super) vs its positive part on the parabolic
    boundary, after confirming the inputs pass their role sweeps."""
    if tol is None:
        tol = 10.0 * scheme.h
    g = scheme.grid
    times = np.linspace(0.05 * T, 0.95 * T, n_times)
    if check_roles:
        rs = subsolution_sweep(u_sub, data, scheme, times, tol_visc=tol)
        rv = supersolution_sweep(v_super, data, scheme, times, tol_visc=tol)
        if not (rs.ok and rv.ok):
            raise InputsNotSubSuper(
                f"sub defect {rs.max_defect:.3e}, super defect "
                f"{rv.max_defect:.3e}, tol {tol:.3e}")
    bpts = grid_projections(g)[g.band]
    interior_max = -np.inf
    for t in times:
        gap = np.asarray(u_sub(t, g.pos), float) - np.asarray(
            v_super(t, g.pos), float)
        interior_max = max(interior_max, float(np.max(gap[g.interior])))
    boundary_max = float(np.max(np.maximum(
        np.asarray(u_sub(0.0, g.pos), float)
        - np.asarray(v_super(0.0, g.pos), float), 0.0)))
    for t in np.linspace(0.0, 0.98 * T, n_times):
        gb = np.asarray(u_sub(t, bpts), float) - np.asarray(
            v_super(t, bpts), float)
        boundary_max = max(boundary_max, float(np.max(np.maximum(gb, 0.0))))
    ok = interior_max <= boundary_max + tol
    return {"interior_max": interior_max, "boundary_max": boundary_max,
            "tol": tol, "ok": ok}


def weak_comparison_shift_test(u_sub: Callable, v_super: Callable, data,
                               scheme: Scheme, eps: float, R: float, S: float,
                               tol: Optional[float] = None,
                               max_halvings: int = 12) -> dict:
    """Smallest shift delta (by halving) with u(t+delta) <= v(t) + eps on
    (R, S) samples, under the (1+eps)-density time-regularity hypothesis."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 <= R < S:
        raise ValueError("need 0 <= R < S")
    if tol is None:
        tol = 10.0 * scheme.h
    g = scheme.grid
    ipts = g.pos[g.interior]
    delta = 0.25 * (S - R)
    for _ in range(max_halvings):
        ts = np.linspace(R + 1e-9, S - delta, 9)
        dens_ok = all(
            np.all((1.0 + eps) * np.asarray(data.f(t + delta, ipts), float)
                   >= np.asarray(data.f(t, ipts), float) - 1e-12)
            for t in ts)
        shift_ok = all(
            float(np.max(np.asarray(u_sub(t + delta, g.pos), float)
                         - np.asarray(v_super(t, g.pos), float)))
            <= eps + tol
            for t in ts)
        if dens_ok and shift_ok:
            return {"delta": float(delta), "eps": eps, "tol": tol}
        delta *= 0.5
    raise NoDeltaFound(f"no shift found after {max_halvings} halvings")


def _fit_modulus(seps: np.ndarray, sups: np.ndarray, lo: float, hi: float,
                 n_bins: int = 12):
    """Log-log least squares on per-bin sup differences inside [lo, hi].

    Snapshot grids produce a handful of distinct separations; those are
    aggregated exactly (max sup per separation) instead of binned, which
    avoids knife-edge bin assignment of repeated float separations.
    """
    eps_round = 1e-9 * max(hi, 1.0)
    keep = (seps >= lo - eps_round) & (seps <= hi + eps_round) & (sups > 0)
    seps, sups = seps[keep], sups[keep]
    if seps.size < 10:
        raise InsufficientData(f"{seps.size} usable pairs in the window")
    uniq = np.unique(np.round(seps / eps_round)) * eps_round
    if uniq.size <= 4 * n_bins:
        xs, ys = [], []
        for s in uniq:
            m = np.abs(seps - s) <= eps_round
            xs.append(float(s))
            ys.append(float(np.max(sups[m])))
    else:
        edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
        edges[-1] += eps_round
        xs, ys = [], []
        for a, b in zip(edges, edges[1:]):
            m = (seps >= a) & (seps < b)
            if m.any():
                xs.append(float(np.max(seps[m])))
                ys.append(float(np.max(sups[m])))
    if len(xs) < 3:
        raise InsufficientData(f"only {len(xs)} occupied separation bins")
    # the modulus at separation tau takes sup over all separations <= tau,
    # so fit the nondecreasing envelope, not the raw per-separation sups
    ys = np.maximum.accumulate(np.asarray(ys, float))
    lx, ly = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return float(coef[0]), float(np.exp(coef[1])), int(seps.size), resid


def holder_modulus(traj: Trajectory, direction: str, target: float,
                   seed: int = 0, slack: float = 0.15,
                   window: Optional[tuple] = None,
                   n_sample_pairs: int = 20000) -> ModulusReport:
    """Fitted Holder exponent of the trajectory in time or space.

    Time: sup-node differences between snapshot pairs vs time separation.
    Space: seeded node-pair sample of the final snapshot vs distance.
    """
    g = traj.snapshots[0].grid
    h = g.h
    if direction == "time":
        ts = traj.times
        if ts.size < 10:
            raise InsufficientData(f"{ts.size} snapshots < 10")
        vals = np.stack([s.values for s in traj.snapshots])
        seps, sups = [], []
        for j in range(1, ts.size):
            for i in range(j):
                seps.append(ts[j] - ts[i])
                sups.append(float(np.max(np.abs(vals[j] - vals[i]))))
        seps = np.asarray(seps)
        sups = np.asarray(sups)
        span = float(ts[-1] - ts[0])
        lo, hi = window if window else (float(np.min(seps)), span / 4.0)
    elif direction == "space":
        u = traj.final
        if g.n_interior < 100:
            raise InsufficientData(f"{g.n_interior} interior nodes < 100")
        rng = np.random.default_rng(seed)
        i = rng.integers(0, g.n_nodes, n_sample_pairs)
        j = rng.integers(0, g.n_nodes, n_sample_pairs)
        seps = np.sqrt(np.sum((g.pos[i] - g.pos[j]) ** 2, axis=1))
        sups = np.abs(u.values[i] - u.values[j])
        diam = float(np.max(g.dom.box[:, 1] - g.dom.box[:, 0]))
        lo, hi = window if window else (4.0 * h, diam / 4.0)
    else:
        raise ValueError("direction must be 'time' or 'space'")
    expo, const, n_pairs, resid = _fit_modulus(seps, sups, lo, hi)
    return ModulusReport(exponent=expo, constant=const, n_pairs=n_pairs,
                         residual=resid, target=target, slack=slack,
                         seed=seed, direction=direction)


def removability_test(data: ProblemData, S: float, T: float, scheme: Scheme,
                      cfg: SolverConfig, tol_seam: Optional[float] = None,
                      witness_eps: float = 0.5) -> dict:
    """Solve across [0,T] in one run vs a restart at the seam S.

    The restarted run takes u(S) as initial data with all samplers shifted by
    S; agreement of the finals within tol_seam plus a successful witness
    search at (u(S), f(S)) exercises seam removability.
    """
    if not 0 < S < T:
        raise ValueError("need 0 < S < T")
    if tol_seam is None:
        tol_seam = 10.0 * scheme.h
    full = solve(data, scheme, replace_T(cfg, T))
    first = solve(data, scheme, replace_T(cfg, S))
    uS = first.final

    def u0_restart(pts):
        pts = np.atleast_2d(pts)
        if pts.shape[0] == uS.values.size:
            return uS.values
        raise ValueError("restart initial data is grid-bound")

    shifted = ProblemData(
        F=lambda t, pts, r: data.F(t + S, pts, r),
        f=lambda t, pts: data.f(t + S, pts),
        phi=lambda t, pts: data.phi(t + S, pts),
        u0=u0_restart,
        horizon=T - S,
        name=data.name + "_restart",
    )
    second = solve(shifted, scheme, replace_T(cfg, T - S))
    seam_diff = float(np.max(np.abs(second.final.values - full.final.values)))
    witness = None
    witness_ok = False
    try:
        witness = find_witness(uS, lambda pts: data.f(S, pts), witness_eps,
                               scheme)
        witness_ok = True
    except Exception:
        pass
    return {"seam_diff": seam_diff, "tol_seam": tol_seam,
            "ok": seam_diff <= tol_seam, "witness_found": witness_ok,
            "witness": witness}


def replace_T(cfg: SolverConfig, T: float) -> SolverConfig:
    return replace(cfg, T=T, snapshot_dt=cfg.snapshot_dt)
