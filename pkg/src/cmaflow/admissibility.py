"""Admissibility witnesses: search, verification, mass criterion, gluing.

A pair (u0, f0 dV) is witnessed at gap eps by a function u_eps with
u0 <= u_eps <= u0 + eps and MA_h(u_eps) <= e^{C_eps} f0 + tol.  The search
first tries u0 itself (enough whenever f0 is bounded away from zero or u0 is
maximal), then solves Dirichlet MA problems against the masked density
min(MA_h(u0), e^C f0) for doubling C.  Failure is reported together with the
discrete MA mass sitting on the near-zero set of f0, never as a proof of
inadmissibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import elliptic as el
from .domain import GridFunction, grid_projections
from .errors import CoverIncomplete, NoWitnessFound
from .scheme import Scheme

C_CAP_DEFAULT = 40.0


@dataclass
class AdmissibilityWitness:
    eps: float
    u_eps: GridFunction
    C_eps: float


def default_tau(g_vals: np.ndarray) -> float:
    return float(np.max(g_vals)) * 1e-6 + 1e-14


def zero_set_mass(u0: GridFunction, g: Callable, scheme: Scheme,
                  tau: Optional[float] = None) -> float:
    """Discrete MA mass of u0 on {g <= tau}: sum MA_h(u0) h^{2n}."""
    gr = scheme.grid
    gv = np.asarray(g(gr.pos[gr.interior]), float)
    if tau is None:
        tau = default_tau(gv)
    if tau <= 0:
        raise ValueError("tau must be positive")
    ma = np.maximum(scheme.ma(u0), 0.0)
    cell = scheme.h ** (2 * scheme.n)
    return float(np.sum(ma[gv <= tau]) * cell)


def verify_witness(w: AdmissibilityWitness, u0: GridFunction, f0: Callable,
                   scheme: Scheme, tol_adm: Optional[float] = None,
                   tol_bracket: float = 1e-8) -> dict:
    """Independent re-check of the witness invariants from scratch."""
    if tol_adm is None:
        tol_adm = 10.0 * scheme.h
    g = scheme.grid
    d = w.u_eps.values - u0.values
    ma = scheme.ma(w.u_eps)
    fv = np.asarray(f0(g.pos[g.interior]), float)
    excess = ma - np.exp(min(w.C_eps, 700.0)) * fv
    rep = {
        "bracket_low": float(np.min(d)),
        "bracket_high": float(np.max(d)),
        "ma_excess": float(np.max(excess)),
        "tol_adm": tol_adm,
    }
    rep["ok"] = (rep["bracket_low"] >= -tol_bracket
                 and rep["bracket_high"] <= w.eps + tol_bracket
                 and rep["ma_excess"] <= tol_adm)
    return rep


def find_witness(u0: GridFunction, f0: Callable, eps: float, scheme: Scheme,
                 c_cap: float = C_CAP_DEFAULT,
                 tol_adm: Optional[float] = None) -> AdmissibilityWitness:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if tol_adm is None:
        tol_adm = 10.0 * scheme.h
    g = scheme.grid
    ipts = g.pos[g.interior]
    fv = np.asarray(f0(ipts), float)
    ma0 = np.maximum(scheme.ma(u0), 0.0)
    max_ma = float(np.max(ma0))
    # route 1: u0 itself
    if max_ma <= tol_adm:
        return AdmissibilityWitness(eps=eps, u_eps=u0.copy(), C_eps=0.0)
    fmin = float(np.min(fv))
    if fmin > 0.0:
        C = max(np.log(max_ma / fmin), 0.0)
        if C <= c_cap:
            return AdmissibilityWitness(eps=eps, u_eps=u0.copy(), C_eps=C)
    # route 2: masked-density Dirichlet solves with doubling C
    proj = grid_projections(g)
    u0_band = u0.values[g.band]
    from scipy.spatial import cKDTree
    tree = cKDTree(g.pos)

    def phi_b(pts):
        _, j = tree.query(pts)
        return u0.values[j]

    C = 1.0
    while C <= c_cap:
        # u0 itself works as soon as e^C f dominates its MA everywhere
        if np.all(ma0 <= np.exp(C) * fv + tol_adm):
            return AdmissibilityWitness(eps=eps, u_eps=u0.copy(), C_eps=C)
        dens = np.minimum(ma0, np.exp(C) * fv)
        prob = el.EllipticProblem(
            F=lambda pts, r: np.zeros(len(pts)),
            f=_interior_sampler(scheme, dens),
            phi=phi_b,
        )
        # bounded effort per candidate: the doubling ladder retries anyway
        cfg = el.EllipticConfig(eps_f=1e-8, residual_target=1e-4,
                                max_iters=20_000)
        try:
            psi = el.solve_dirichlet_ma(prob, scheme, cfg, init=u0.copy())
        except Exception:
            psi = None
        if psi is not None:
            cand = AdmissibilityWitness(
                eps=eps,
                u_eps=GridFunction(g, np.maximum(psi.values, u0.values)),
                C_eps=C,
            )
            if verify_witness(cand, u0, f0, scheme, tol_adm=tol_adm)["ok"]:
                return cand
        C = min(2.0 * C, c_cap) if C < c_cap else c_cap + 1.0
    raise NoWitnessFound(zero_set_mass(u0, f0, scheme), c_cap)


def _interior_sampler(scheme: Scheme, interior_vals: np.ndarray):
    g = scheme.grid
    from scipy.spatial import cKDTree
    tree = cKDTree(g.pos[g.interior])

    def fn(pts):
        _, j = tree.query(np.atleast_2d(pts))
        return interior_vals[j]

    return fn


def glue_local_witnesses(u0: GridFunction, u0_boundary: Callable,
                         f0: Callable,
                         witnesses: Sequence[AdmissibilityWitness],
                         centers: np.ndarray, radii: Sequence[float],
                         scheme: Scheme, eps: float,
                         collar_r: float) -> AdmissibilityWitness:
    """Min-gluing of local witnesses with quadratic weights plus a collar.

    Each witness k is valid on the ball B(p_k, 2 r_k); nodes deeper than
    2 collar_r must be covered by the radius-r_k balls.  The glued candidate
    min_k (w_k + eps |z-p_k|^2 / r_k^2) - eps |z|^2 / min r_k^2 is completed
    near the boundary by maxext(u0|bdry) - eps rho / collar_r, then shifted
    upward so the lower bracket holds; the widened gap eps' is reported on
    the returned witness.
    """
    g = scheme.grid
    if len(witnesses) == 0:
        raise CoverIncomplete("no local witnesses supplied")
    centers = np.atleast_2d(np.asarray(centers, float))
    radii = np.asarray(list(radii), float)
    if centers.shape[0] != len(witnesses) or radii.size != len(witnesses):
        raise ValueError("witnesses, centers and radii must align")
    d2 = np.sum((g.pos[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    dist = np.sqrt(d2)
    deep = g.rho < -2.0 * collar_r
    covered_small = dist[deep] < radii[None, :]
    if deep.any() and not covered_small.any(axis=1).all():
        raise CoverIncomplete("deep-interior nodes outside every small ball")
    r_min2 = float(np.min(radii)) ** 2
    z2 = np.sum(g.pos ** 2, axis=1)
    glued = np.full(g.n_nodes, np.inf)
    for k, w in enumerate(witnesses):
        in_big = dist[:, k] < 2.0 * radii[k]
        cand = w.u_eps.values + eps * d2[:, k] / (radii[k] ** 2)
        glued = np.where(in_big, np.minimum(glued, cand), glued)
    glued = glued - eps * z2 / r_min2
    maxext = el.maximal_extension(u0_boundary, scheme)
    collar = maxext.values - eps * g.rho / collar_r
    vals = np.where(np.isfinite(glued), np.minimum(glued, collar), collar)
    shift = max(0.0, float(np.max(u0.values - vals)))
    vals = vals + shift
    eps_eff = float(np.max(vals - u0.values))
    C_prime = max(w.C_eps for w in witnesses)
    return AdmissibilityWitness(eps=eps_eff,
                                u_eps=GridFunction(g, vals), C_eps=C_prime)


def eps_prime_bound(witnesses, radii, scheme: Scheme, eps: float) -> float:
    """Widened-gap bound for the glued witness: local gaps + quadratic terms."""
    z2_max = float(np.max(np.sum(scheme.grid.pos ** 2, axis=1)))
    r_min2 = float(np.min(np.asarray(list(radii), float))) ** 2
    local = max(w.eps for w in witnesses)
    return local + eps * (4.0 + 2.0 * z2_max / r_min2) + eps
