"""Pointwise discrete sub/supersolution sweeps.

A space-time sampler w(t, pts) is a discrete subsolution of
e^{dt_u + F(t,z,u)} f = MA(u) when MA_h(w) >= e^{dw/dt + F} f at Interior
nodes, and a supersolution when MA_h(w) <= e^{dw/dt + F} f at Interior nodes
where w is discretely psh.  Time derivatives use one-sided differences and the
side favorable to the inequality: barriers built as max (sub) or min (super)
of Lipschitz branches have one-sided derivatives, and the favorable side is
the one the viscosity test sees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import GridFunction
from .scheme import Scheme

TOL_PSH_SWEEP = 1e-7


@dataclass
class SweepReport:
    kind: str
    max_defect: float
    tol: float
    worst_time: float
    n_times: int
    n_checked: int

    @property
    def ok(self) -> bool:
        return self.max_defect <= self.tol


def _one_sided_dt(w, t: float, pts: np.ndarray, dt_probe: float, favor: str):
    """min or max of the forward/backward difference quotients at t."""
    c = np.asarray(w(t, pts), float)
    fwd = (np.asarray(w(t + dt_probe, pts), float) - c) / dt_probe
    bwd = (c - np.asarray(w(t - dt_probe, pts), float)) / dt_probe if t - dt_probe > 0 \
        else fwd
    return np.minimum(fwd, bwd) if favor == "min" else np.maximum(fwd, bwd), c


def subsolution_sweep(w: Callable, data, scheme: Scheme,
                      times: Sequence[float], tol_visc: Optional[float] = None,
                      dt_probe: float = 1e-3) -> SweepReport:
    """max over times/Interior nodes of e^{dt_w + F} f - MA_h(w)."""
    if tol_visc is None:
        tol_visc = 10.0 * scheme.h
    g = scheme.grid
    worst, worst_t, checked = -np.inf, float("nan"), 0
    for t in times:
        dtw, c = _one_sided_dt(w, t, g.pos, dt_probe, favor="min")
        u = GridFunction(g, c, t)
        ma = scheme.ma(u)
        fval = np.asarray(data.f(t, g.pos[g.interior]), float)
        Fval = np.asarray(data.F(t, g.pos[g.interior], c[g.interior]), float)
        rhs = np.exp(np.clip(dtw[g.interior] + Fval, -700, 700)) * fval
        defect = rhs - ma
        checked += defect.size
        j = int(np.argmax(defect))
        if defect[j] > worst:
            worst, worst_t = float(defect[j]), float(t)
    return SweepReport("sub", worst, tol_visc, worst_t, len(list(times)), checked)


def supersolution_sweep(w: Callable, data, scheme: Scheme,
                        times: Sequence[float], tol_visc: Optional[float] = None,
                        dt_probe: float = 1e-3) -> SweepReport:
    """max over times/psh Interior nodes of MA_h(w) - e^{dt_w + F} f.

    Nodes where w fails the discrete psh test are skipped: the viscosity
    supersolution property only constrains psh test functions.
    """
    if tol_visc is None:
        tol_visc = 10.0 * scheme.h
    g = scheme.grid
    worst, worst_t, checked = -np.inf, float("nan"), 0
    for t in times:
        dtw, c = _one_sided_dt(w, t, g.pos, dt_probe, favor="max")
        u = GridFunction(g, c, t)
        ma = scheme.ma(u)
        psh = scheme.psh_flags(u, tol_psh=TOL_PSH_SWEEP)
        if not psh.any():
            continue
        fval = np.asarray(data.f(t, g.pos[g.interior]), float)
        Fval = np.asarray(data.F(t, g.pos[g.interior], c[g.interior]), float)
        rhs = np.exp(np.clip(dtw[g.interior] + Fval, -700, 700)) * fval
        defect = np.where(psh, ma - rhs, -np.inf)
        checked += int(psh.sum())
        j = int(np.argmax(defect))
        if defect[j] > worst:
            worst, worst_t = float(defect[j]), float(t)
    return SweepReport("super", worst, tol_visc, worst_t, len(list(times)), checked)
