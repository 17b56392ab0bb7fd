"""Sup/inf convolutions in time and the shifted data they solve against.

Convolutions act on discrete time profiles (one value row per snapshot time)
and are computed by exhaustive max/min over the time axis, so every contract
(sandwich, Lipschitz, monotonicity in k, duality, attainment) is exactly
testable against a brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .domain import ProblemData


@dataclass
class TimeProfile:
    times: np.ndarray  # (S,), strictly increasing
    values: np.ndarray  # (S, m)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.values = np.atleast_2d(np.asarray(self.values, float))
        if self.times.ndim != 1 or self.values.shape[0] != self.times.size:
            raise ValueError("times and values are inconsistent")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("time axis must be strictly increasing")

    @property
    def osc(self) -> float:
        return float(np.max(self.values) - np.min(self.values))


def from_trajectory(traj) -> TimeProfile:
    return TimeProfile(times=traj.times,
                       values=np.stack([s.values for s in traj.snapshots]))


def sup_convolution(u: TimeProfile, k: float) -> TimeProfile:
    """u^k(t, z) = max over grid times s of u(s, z) - k |s - t|."""
    if k <= 0:
        raise ValueError("k must be positive")
    gap = np.abs(u.times[:, None] - u.times[None, :])  # (t, s)
    out = np.max(u.values[None, :, :] - k * gap[:, :, None], axis=1)
    return TimeProfile(times=u.times.copy(), values=out)


def inf_convolution(v: TimeProfile, k: float) -> TimeProfile:
    """v_k(t, z) = min over grid times s of v(s, z) + k |s - t|."""
    if k <= 0:
        raise ValueError("k must be positive")
    gap = np.abs(v.times[:, None] - v.times[None, :])
    out = np.min(v.values[None, :, :] + k * gap[:, :, None], axis=1)
    return TimeProfile(times=v.times.copy(), values=out)


def default_width(u: TimeProfile) -> float:
    """A = 2 osc(u) + 1, strictly above the 2 osc threshold."""
    return 2.0 * u.osc + 1.0


def shifted_data(data: ProblemData, k: float, A: float,
                 time_grid: Sequence[float]) -> ProblemData:
    """Data (F_k, f_k) the sup-convolved profile solves against.

    F_k(t,z,r) = min over grid s with |s-t| <= A/k of F(s,z,r) + k|s-t|;
    f_k(t,z) = min over the same window of f(s,z).
    """
    if k <= 0:
        raise ValueError("k must be positive")
    ts = np.asarray(list(time_grid), float)
    width = A / k

    def F_k(t, pts, r):
        sel = ts[np.abs(ts - t) <= width + 1e-12]
        if sel.size == 0:
            sel = ts[[int(np.argmin(np.abs(ts - t)))]]
        vals = np.stack([np.asarray(data.F(s, pts, r), float)
                         + k * abs(s - t) for s in sel])
        return np.min(vals, axis=0)

    def f_k(t, pts):
        sel = ts[np.abs(ts - t) <= width + 1e-12]
        if sel.size == 0:
            sel = ts[[int(np.argmin(np.abs(ts - t)))]]
        vals = np.stack([np.asarray(data.f(s, pts), float) for s in sel])
        return np.min(vals, axis=0)

    return replace(data, F=F_k, f=f_k, name=data.name + f"_shifted_k={k:g}")


def time_lipschitz_bound(traj, data=None, C0: float = 0.0, CM: float = 0.0,
                         n: int = 1, tol: float = 0.0) -> dict:
    """Measured snapshot difference quotients vs the predicted bound.

    For snapshot times B < A the prediction is 2M/A + max(C0, B CM) + n + M B
    with M = sup |u| over the trajectory; pairs whose measured quotient
    exceeds prediction + tol are flagged.
    """
    ts = traj.times
    vals = np.stack([s.values for s in traj.snapshots])
    M = float(np.max(np.abs(vals)))
    pairs = []
    violations = 0
    for j in range(1, ts.size):
        for i in range(j):
            B, A = float(ts[i]), float(ts[j])
            if B <= 0:
                continue  # the 2M/A blowup form needs B > 0
            q = float(np.max(np.abs(vals[j] - vals[i]))) / (A - B)
            bound = 2.0 * M / A + max(C0, B * CM) + n + M * B
            bad = q > bound + tol
            violations += int(bad)
            pairs.append({"B": B, "A": A, "quotient": q, "bound": bound,
                          "ok": not bad})
    return {"M": M, "pairs": pairs, "violations": violations,
            "n_pairs": len(pairs)}
