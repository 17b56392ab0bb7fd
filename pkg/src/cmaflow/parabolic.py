"""Explicit monotone time stepping for the parabolic complex MA flow.

The flow is solved in log form,

    du/dt = log(max(MA_h(u), eps_ma)) - log(f(t,z) + eps_f) - F(t, z, u),

with a Jacobi sweep: every Interior update reads only the previous state.
Band nodes carry the Dirichlet value phi at the projected boundary point plus
a first-order correction from the nearest interior neighbor of the previous
state, so the boundary layer is consistent to O(h^2) without extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .domain import GridFunction, ProblemData
from .errors import DegenerateDensity, MaxStepsExceeded, NonFiniteUpdate
from .scheme import Scheme

LOG_CAP = 700.0


@dataclass
class SolverConfig:
    T: float = 1.0
    dt: Optional[float] = None  # fixed step; None = CFL rule
    lambda_cfl: float = 0.2
    eps_ma: float = 1e-12
    eps_f: float = 0.0
    max_steps: int = 2_000_000
    residual_target: float = 0.0  # sup-change threshold for steady-state stop
    snapshot_dt: Optional[float] = None  # default T/16
    bounds: Optional[Tuple[Callable, Callable]] = None  # (lower, upper) samplers

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.eps_ma <= 0:
            raise ValueError("eps_ma must be positive")
        if self.eps_f < 0:
            raise ValueError("eps_f must be nonnegative")


@dataclass
class SolveReport:
    times: np.ndarray
    sup_change: np.ndarray
    clamp_counts: np.ndarray
    dts: np.ndarray
    bound_violations: list
    steps: int
    reached_steady: bool


@dataclass
class Trajectory:
    snapshots: List[GridFunction]
    report: Optional[SolveReport] = None

    def __post_init__(self):
        ts = self.times
        if ts.size and not np.all(np.diff(ts) > 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def at(self, t: float) -> GridFunction:
        """Snapshot at time t, linearly interpolated between stored times."""
        ts = self.times
        if t <= ts[0]:
            return self.snapshots[0]
        if t >= ts[-1]:
            return self.snapshots[-1]
        j = int(np.searchsorted(ts, t))
        a, b = self.snapshots[j - 1], self.snapshots[j]
        w = (t - ts[j - 1]) / (ts[j] - ts[j - 1])
        return GridFunction(a.grid, (1 - w) * a.values + w * b.values, t)

    @property
    def final(self) -> GridFunction:
        return self.snapshots[-1]


def band_dirichlet(grid, u_prev: np.ndarray, t: float, data: ProblemData) -> np.ndarray:
    """Band values: phi at the projection plus the rho-ratio interior correction."""
    grid.band_geometry()
    pb, nbr, pn_uq, inv, ratio = grid._band_phi_plan
    phi_b = np.asarray(data.phi(t, pb), float)
    phi_n = np.asarray(data.phi(t, pn_uq), float)[inv]
    return phi_b + (u_prev[nbr] - phi_n) * ratio


def _interior_rate(u: GridFunction, t: float, data: ProblemData, scheme: Scheme,
                   eps_ma: float, eps_f: float, need_scale: bool = True):
    """Flow right-hand side at Interior nodes; returns (rate, clamp_count, scale).

    The scale term is only consumed by the CFL rule; fixed-dt callers pass
    need_scale=False to skip two full-array reductions per step.
    """
    g = scheme.grid
    ma = scheme.ma(u)
    clamped = np.maximum(ma, eps_ma)
    pts = g.interior_pos
    fval = np.asarray(data.f(t, pts), float) + eps_f
    if np.any(fval <= 0.0):
        raise DegenerateDensity("f + eps_f vanishes at an Interior node")
    Fval = np.asarray(data.F(t, pts, u.values[g.interior]), float)
    log_ma = np.log(clamped)
    rate = log_ma - np.log(fval) - Fval
    if need_scale:
        scale = float(np.max(np.abs(log_ma)) + np.max(np.abs(Fval)))
    else:
        scale = 0.0
    return rate, int(np.count_nonzero(ma < eps_ma)), scale


def step(u: GridFunction, t: float, dt: float, data: ProblemData,
         scheme: Scheme, cfg: SolverConfig) -> Tuple[GridFunction, int]:
    """One explicit step; returns (new state at t+dt, clamp count)."""
    g = scheme.grid
    rate, clamps, _ = _interior_rate(u, t, data, scheme, cfg.eps_ma, cfg.eps_f)
    new = u.values.copy()
    new[g.interior] += dt * rate
    new[g.band] = band_dirichlet(g, u.values, t + dt, data)
    if not np.isfinite(new).all():
        raise NonFiniteUpdate(f"non-finite state after step at t={t:.4g}")
    return GridFunction(g, new, t + dt), clamps


def cfl_dt(scheme: Scheme, rate_scale: float, lambda_cfl: float) -> float:
    return lambda_cfl * scheme.h ** 2 / (1.0 + rate_scale)


def solve(data: ProblemData, scheme: Scheme, cfg: SolverConfig) -> Trajectory:
    """Advance from u0 to T (or steady state), recording strided snapshots."""
    g = scheme.grid
    T = min(cfg.T, data.horizon) if np.isfinite(data.horizon) else cfg.T
    if not np.isfinite(T) or T <= 0:
        raise ValueError("a finite positive horizon is required")
    snap_dt = cfg.snapshot_dt if cfg.snapshot_dt is not None else T / 16.0
    u = scheme.sample(data.u0, 0.0).check_finite()
    snaps = [u.copy()]
    next_snap = snap_dt
    times, changes, clamps_h, dts = [], [], [], []
    violations = []
    t = 0.0
    steady = False
    for n_step in range(cfg.max_steps):
        rate, clamps, scale = _interior_rate(u, t, data, scheme,
                                             cfg.eps_ma, cfg.eps_f,
                                             need_scale=cfg.dt is None)
        if cfg.dt is not None:
            dt = cfg.dt
        else:
            dt = cfl_dt(scheme, scale, cfg.lambda_cfl)
        dt = min(dt, T - t)
        new = u.values.copy()
        new[g.interior] += dt * rate
        new[g.band] = band_dirichlet(g, u.values, t + dt, data)
        if not np.isfinite(new).all():
            raise NonFiniteUpdate(f"non-finite state after step at t={t:.4g}")
        change = float(np.max(np.abs(new - u.values)))
        u = GridFunction(g, new, t + dt)
        t += dt
        times.append(t)
        changes.append(change)
        clamps_h.append(clamps)
        dts.append(dt)
        if t >= next_snap - 1e-12 or t >= T - 1e-12:
            snap = u.copy()
            snaps.append(snap)
            next_snap += snap_dt
            if cfg.bounds is not None:
                lo = np.asarray(cfg.bounds[0](t, g.pos), float)
                hi = np.asarray(cfg.bounds[1](t, g.pos), float)
                tol = 10.0 * scheme.h
                bad = np.count_nonzero((u.values < lo - tol) | (u.values > hi + tol))
                if bad:
                    violations.append((t, bad))
        if t >= T - 1e-12:
            break
        if cfg.residual_target > 0 and change < cfg.residual_target:
            steady = True
            if snaps[-1].t < t:
                snaps.append(u.copy())
            break
    else:
        raise MaxStepsExceeded(f"t={t:.4g} < T={T:.4g} after {cfg.max_steps} steps")
    report = SolveReport(
        times=np.array(times), sup_change=np.array(changes),
        clamp_counts=np.array(clamps_h), dts=np.array(dts),
        bound_violations=violations, steps=len(times), reached_steady=steady,
    )
    return Trajectory(snapshots=snaps, report=report)


def rescale_time(traj: Trajectory, A: float) -> Trajectory:
    """Trajectory of (1/A) u(A t, z): times divide by A, values divide by A."""
    if A <= 0:
        raise ValueError("A must be positive")
    snaps = [GridFunction(s.grid, s.values / A, s.t / A) for s in traj.snapshots]
    return Trajectory(snapshots=snaps, report=traj.report)


def regularized_family_solve(data: ProblemData, scheme: Scheme, cfg: SolverConfig,
                             eps_f_seq: Sequence[float]):
    """Solve with f + eps_j for a decreasing eps ladder.

    Returns (trajectories, report) where report lists the pairwise sup-norm
    distance of final snapshots for consecutive ladder entries.  A family
    settling toward a limit shows these distances shrinking with eps; no limit
    is asserted.
    """
    eps_f_seq = list(eps_f_seq)
    if any(b >= a for a, b in zip(eps_f_seq, eps_f_seq[1:])):
        raise ValueError("eps_f sequence must be strictly decreasing")
    trajs = []
    for e in eps_f_seq:
        c = SolverConfig(**{**cfg.__dict__, "eps_f": float(e)})
        trajs.append(solve(data, scheme, c))
    gaps = [float(np.max(np.abs(a.final.values - b.final.values)))
            for a, b in zip(trajs, trajs[1:])]
    return trajs, {"eps_f": eps_f_seq, "final_gaps": gaps}
