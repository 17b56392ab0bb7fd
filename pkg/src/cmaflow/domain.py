"""Domains given by defining functions, Cartesian grids and node classification.

A domain is Omega = {rho < 0} for a C^2 strictly plurisubharmonic defining
function rho on C^n, identified with R^{2n} through
x = (Re z_1, Im z_1, ..., Re z_n, Im z_n).  Grids are uniform lattices on a
bounding box; nodes are classified Interior / BoundaryBand / Exterior, with
the band wide enough that every interior wide-stencil probe of radius h stays
on known nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import (
    DegenerateDomain,
    GridTooCoarse,
    NotStronglyPseudoconvex,
    ProjectionDiverged,
)

EXTERIOR, BAND, INTERIOR = 0, 1, 2


def embed(z: np.ndarray) -> np.ndarray:
    """Complex (m, n) -> real (m, 2n)."""
    z = np.atleast_2d(z)
    out = np.empty((z.shape[0], 2 * z.shape[1]))
    out[:, 0::2] = z.real
    out[:, 1::2] = z.imag
    return out


def unembed(x: np.ndarray) -> np.ndarray:
    """Real (m, 2n) -> complex (m, n)."""
    x = np.atleast_2d(x)
    return x[:, 0::2] + 1j * x[:, 1::2]


def abs2(x: np.ndarray) -> np.ndarray:
    """|z|^2 for real-embedded points, shape (m,)."""
    x = np.atleast_2d(x)
    return np.einsum("ij,ij->i", x, x)


@dataclass(frozen=True)
class DomainSpec:
    """Strongly pseudoconvex domain {rho < 0} with an analytic defining function.

    rho and grad_rho act on real-embedded points of shape (m, 2n).
    """

    n: int
    rho: Callable[[np.ndarray], np.ndarray]
    grad_rho: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray  # (2n, 2) lower/upper bounds
    name: str = "custom"

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n = 1, 2 supported")
        object.__setattr__(self, "box", np.asarray(self.box, dtype=float))


def ball(n: int = 1, radius: float = 1.0, pad: float = 0.1) -> DomainSpec:
    r2 = radius * radius

    def rho(x):
        return abs2(x) - r2

    def grad(x):
        return 2.0 * np.atleast_2d(x)

    box = np.array([[-radius - pad, radius + pad]] * (2 * n))
    return DomainSpec(n=n, rho=rho, grad_rho=grad, box=box, name="ball")


def ellipsoid(coeffs, pad: float = 0.1) -> DomainSpec:
    """rho = sum_j a_j |z_j|^2 - 1 with a_j > 0."""
    a = np.asarray(coeffs, dtype=float)
    n = a.size
    w = np.repeat(a, 2)

    def rho(x):
        return np.sum(w * np.atleast_2d(x) ** 2, axis=1) - 1.0

    def grad(x):
        return 2.0 * w * np.atleast_2d(x)

    half = 1.0 / np.sqrt(w) + pad
    box = np.stack([-half, half], axis=1)
    return DomainSpec(n=n, rho=rho, grad_rho=grad, box=box, name="ellipsoid")


def smoothed_polydisc(n: int = 2, pad: float = 0.1) -> DomainSpec:
    """Quartic smoothing of the polydisc: sum |z_j|^4 + 0.2|z|^2 = 1.2."""

    def rho(x):
        x = np.atleast_2d(x)
        m = np.sum(x.reshape(x.shape[0], n, 2) ** 2, axis=2)  # |z_j|^2
        return np.sum(m ** 2, axis=1) + 0.2 * np.sum(m, axis=1) - 1.2

    def grad(x):
        x = np.atleast_2d(x)
        m = np.sum(x.reshape(x.shape[0], n, 2) ** 2, axis=2)
        w = np.repeat(2.0 * m + 0.2, 2, axis=1)
        return 2.0 * w * x

    box = np.array([[-1.15 - pad, 1.15 + pad]] * (2 * n))
    return DomainSpec(n=n, rho=rho, grad_rho=grad, box=box, name="smoothed_polydisc")


BUILTIN_DOMAINS = {
    "ball": ball,
    "ellipsoid": ellipsoid,
    "smoothed_polydisc": smoothed_polydisc,
}


class SpaceGrid:
    """Uniform lattice over the bounding box with classified nodes.

    Values live on non-Exterior nodes only (compact indexing).  Construction is
    deterministic given (dom, h, band radius).
    """

    def __init__(self, dom: DomainSpec, h: float, band_units: int = 1):
        if h <= 0:
            raise ValueError("h must be positive")
        self.dom = dom
        self.h = float(h)
        self.band_units = int(band_units)
        d = 2 * dom.n
        lo = dom.box[:, 0]
        hi = dom.box[:, 1]
        self.shape = tuple(int(np.floor((hi[k] - lo[k]) / h)) + 1 for k in range(d))
        self.lo = lo.copy()
        # full-lattice coordinates and rho
        grids = np.meshgrid(
            *[lo[k] + h * np.arange(self.shape[k]) for k in range(d)],
            indexing="ij",
        )
        pts = np.stack([g.ravel() for g in grids], axis=1)
        rho_full = dom.rho(pts)
        inside = (rho_full < 0.0).reshape(self.shape)
        if not inside.any():
            raise DegenerateDomain("rho >= 0 at every lattice point")
        # interior: rho < -c*h and the full Chebyshev-band_units support inside
        support_ok = ndimage.minimum_filter(
            inside, size=2 * self.band_units + 1, mode="constant", cval=False
        )
        deep = (rho_full < -self.band_units * h).reshape(self.shape)
        interior = inside & deep & support_ok
        if not interior.any():
            raise GridTooCoarse(f"no interior node at h={h}")
        cls = np.zeros(self.shape, dtype=np.int8)
        cls[inside] = BAND
        cls[interior] = INTERIOR
        self.cls_full = cls.ravel()
        self.node_flat = np.flatnonzero(self.cls_full > 0).astype(np.int64)
        self.comp_of_flat = np.full(self.cls_full.size, -1, dtype=np.int64)
        self.comp_of_flat[self.node_flat] = np.arange(self.node_flat.size)
        self.pos = pts[self.node_flat]
        self.rho = rho_full[self.node_flat]
        self.node_cls = self.cls_full[self.node_flat]
        self.is_interior = self.node_cls == INTERIOR
        self.interior = np.flatnonzero(self.is_interior)
        self.band = np.flatnonzero(~self.is_interior)
        self.strides = np.array(
            [int(np.prod(self.shape[k + 1:])) for k in range(d)], dtype=np.int64
        )
        self._plans: dict = {}
        self._band_geom = None
        self._band_phi_plan = None
        self._interior_pos = None
        self._scratch: dict = {}

    @property
    def interior_pos(self) -> np.ndarray:
        """Cached positions of the Interior nodes (large grids step often)."""
        if self._interior_pos is None:
            self._interior_pos = self.pos[self.interior]
        return self._interior_pos

    @property
    def n_nodes(self) -> int:
        return self.node_flat.size

    @property
    def n_interior(self) -> int:
        return self.interior.size

    def gather_plan(self, offset_units: np.ndarray):
        """Index/weight plan for the probe at pos + h*offset (interior nodes).

        offset_units is a real vector in grid units.  Returns a list of
        (compact_index_array, weight) pairs; weights are the multilinear
        interpolation weights (nonnegative, summing to 1) and are shared by all
        interior nodes since the lattice is uniform.
        """
        key = tuple(np.round(np.asarray(offset_units, dtype=float), 12))
        plan = self._plans.get(key)
        if plan is not None:
            return plan
        off = np.asarray(key)
        base = np.floor(off + 1e-12).astype(np.int64)
        frac = off - base
        frac[np.abs(frac) < 1e-12] = 0.0
        d = off.size
        corners = []
        for mask in range(1 << d):
            w = 1.0
            delta = base.copy()
            for k in range(d):
                if mask >> k & 1:
                    w *= frac[k]
                    delta[k] += 1
                else:
                    w *= 1.0 - frac[k]
            if w <= 0.0:
                continue
            flat_delta = int(np.dot(delta, self.strides))
            target = self.node_flat[self.interior] + flat_delta
            from .errors import StencilOutOfDomain

            if (target < 0).any() or (target >= self.cls_full.size).any():
                raise StencilOutOfDomain(
                    f"probe offset {off} leaves the lattice"
                )
            comp = self.comp_of_flat[target]
            if (comp < 0).any():
                raise StencilOutOfDomain(
                    f"probe offset {off} leaves the known-node set"
                )
            corners.append((comp, w))
        plan = corners
        self._plans[key] = plan
        return plan

    def band_geometry(self):
        """Projection points and nearest-interior links for band nodes.

        Returns (proj_band, nbr, proj_nbr, ratio) where ratio =
        rho(band)/rho(neighbor) in [0, 1] is the first-order Dirichlet
        correction weight.
        """
        if self._band_geom is None:
            pb = project_to_boundary(self.dom, self.pos[self.band])
            tree = cKDTree(self.pos[self.interior])
            _, j = tree.query(self.pos[self.band])
            nbr = self.interior[j]
            # neighbors repeat heavily (several band nodes share one), so
            # project and later evaluate phi only at the unique ones
            uq, first, inv = np.unique(nbr, return_index=True,
                                       return_inverse=True)
            pn_uq = project_to_boundary(self.dom, self.pos[uq])
            pn = pn_uq[inv]
            ratio = self.rho[self.band] / self.rho[nbr]
            ratio = np.clip(ratio, 0.0, 1.0)
            self._band_geom = (pb, nbr, pn, ratio)
            self._band_phi_plan = (pb, nbr, pn_uq, inv, ratio)
        return self._band_geom


@dataclass
class GridFunction:
    """Scalar values on the non-Exterior nodes of a grid."""

    grid: SpaceGrid
    values: np.ndarray
    t: Optional[float] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError("value array does not match grid")

    def check_finite(self):
        if not np.isfinite(self.values).all():
            raise ValueError("GridFunction carries non-finite values")
        return self

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.t)


def sample_on_grid(grid: SpaceGrid, func, t: Optional[float] = None) -> GridFunction:
    """Sample a spatial callable (pts -> values) on all non-Exterior nodes."""
    return GridFunction(grid, np.asarray(func(grid.pos), dtype=float), t)


def build_grid(dom: DomainSpec, h: float, band_units: int = 1) -> SpaceGrid:
    return SpaceGrid(dom, h, band_units=band_units)


def project_to_boundary(
    dom: DomainSpec,
    x: np.ndarray,
    tol_proj: float = 1e-10,
    max_iter: int = 60,
) -> np.ndarray:
    """Damped Newton along grad(rho) from near-boundary points onto {rho = 0}."""
    x = np.atleast_2d(np.asarray(x, dtype=float)).copy()
    single = x.shape[0] == 1
    for _ in range(max_iter):
        r = dom.rho(x)
        if np.max(np.abs(r)) <= tol_proj:
            return x[0] if single else x
        g = dom.grad_rho(x)
        g2 = np.sum(g * g, axis=1)
        if np.min(g2) <= 1e-30:
            raise ProjectionDiverged("vanishing gradient during projection")
        step = (r / g2)[:, None] * g
        xn = x - step
        rn = dom.rho(xn)
        # damp where the residual grew
        bad = np.abs(rn) > np.abs(r)
        k = 0
        while bad.any() and k < 30:
            step[bad] *= 0.5
            xn[bad] = x[bad] - step[bad]
            rn[bad] = dom.rho(xn[bad])
            bad = np.abs(rn) > np.abs(r)
            k += 1
        x = xn
    raise ProjectionDiverged(f"projection residual {np.max(np.abs(dom.rho(x))):.3e}")


def star_project(dom: DomainSpec, x: np.ndarray,
                 anchor: Optional[np.ndarray] = None,
                 iters: int = 80) -> np.ndarray:
    """Radial projection onto {rho = 0} along rays from an interior anchor.

    Robust for points deep inside, where Newton along grad(rho) degenerates;
    requires the domain to be star shaped about the anchor, true of all
    built-ins.  Points on the anchor itself leave along the first axis.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if anchor is None:
        anchor = np.zeros(x.shape[1])
    d = x - anchor
    nrm = np.sqrt(np.sum(d * d, axis=1, keepdims=True))
    degenerate = nrm[:, 0] < 1e-14
    d[degenerate] = 0.0
    d[degenerate, 0] = 1.0
    nrm[degenerate, 0] = 1.0
    d /= nrm
    lo = np.zeros(x.shape[0])
    hi = np.full(x.shape[0], 1e-6)
    # bracket: grow hi until rho >= 0 along every ray
    for _ in range(200):
        out = dom.rho(anchor + hi[:, None] * d) >= 0.0
        if out.all():
            break
        hi[~out] *= 1.6
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = dom.rho(anchor + mid[:, None] * d) < 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return anchor + (0.5 * (lo + hi))[:, None] * d


def grid_projections(grid: SpaceGrid) -> np.ndarray:
    """Boundary projections of every non-Exterior node, cached on the grid."""
    if not hasattr(grid, "_all_proj"):
        anchor = grid.pos[int(np.argmin(grid.rho))]
        grid._all_proj = star_project(grid.dom, grid.pos, anchor=anchor)
    return grid._all_proj


def complex_hessian_quadratic_form(dom_rho, x: np.ndarray, v: np.ndarray,
                                   delta: float = 1e-3) -> np.ndarray:
    """v* H_rho v at points x by the 4-point centered difference, |v| = 1."""
    ov = embed(v[None, :])[0]
    oiv = embed((1j * v)[None, :])[0]
    s = (
        dom_rho(x + delta * ov)
        + dom_rho(x - delta * ov)
        + dom_rho(x + delta * oiv)
        + dom_rho(x - delta * oiv)
        - 4.0 * dom_rho(x)
    )
    return s / (4.0 * delta * delta)


def validate_domain(dom: DomainSpec, samples: int = 64, seed: int = 0,
                    tol: float = 1e-6):
    """Check nondegenerate gradient and strict pseudoconvexity near {rho = 0}.

    Samples near-boundary points (by projecting random box points onto the
    boundary and stepping slightly inward), probes the complex Hessian of rho
    along random unit directions and reports the minimum quadratic-form proxy.

    Raises NotStronglyPseudoconvex with an offending point on failure.
    """
    if samples < 1:
        raise ValueError("samples >= 1 required")
    rng = np.random.default_rng(seed)
    d = 2 * dom.n
    lo, hi = dom.box[:, 0], dom.box[:, 1]
    pts = lo + (hi - lo) * rng.random((8 * samples, d))
    r = dom.rho(pts)
    inside = pts[r < 0]
    if inside.shape[0] == 0:
        raise DegenerateDomain("no interior sample found")
    inside = inside[: samples]
    bpts = project_to_boundary(dom, inside)
    scale = float(np.max(hi - lo))
    near = bpts - 0.02 * scale * _unit_rows(dom.grad_rho(bpts))
    g = dom.grad_rho(near)
    gnorm = np.sqrt(np.sum(g * g, axis=1))
    if np.min(gnorm) <= tol:
        bad = near[int(np.argmin(gnorm))]
        raise NotStronglyPseudoconvex(bad, float(np.min(gnorm)))
    min_proxy = np.inf
    worst = None
    for _ in range(12):
        v = rng.standard_normal(dom.n) + 1j * rng.standard_normal(dom.n)
        v /= np.linalg.norm(v)
        q = complex_hessian_quadratic_form(dom.rho, near, v)
        j = int(np.argmin(q))
        if q[j] < min_proxy:
            min_proxy = float(q[j])
            worst = near[j]
    if min_proxy <= tol:
        raise NotStronglyPseudoconvex(worst, min_proxy)
    return {"samples": near.shape[0], "min_grad_norm": float(np.min(gnorm)),
            "min_hessian_proxy": min_proxy}


def _unit_rows(g: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(np.sum(g * g, axis=1, keepdims=True))
    return g / np.maximum(nrm, 1e-300)


@dataclass
class ProblemData:
    """Cauchy-Dirichlet data for the parabolic flow.

    F(t, pts, r) is non-decreasing in r; f(t, pts) >= 0 bounded;
    phi(t, pts) samples the boundary data (pts on the analytic boundary);
    u0(pts) samples the initial condition.  horizon may be np.inf for
    long-time runs.
    """

    F: Callable
    f: Callable
    phi: Callable
    u0: Callable
    horizon: float = 1.0
    name: str = "problem"


def validate_problem(data: ProblemData, dom: DomainSpec, grid: SpaceGrid,
                     seed: int = 0, tol_compat: Optional[float] = None,
                     n_spots: int = 32):
    """Spot-check problem invariants; returns a report dict.

    Compatibility |u0 - phi(0,.)| is checked at projected band nodes within
    tol_compat (default 10*h); f >= 0 and monotonicity of F in r are sampled.
    Violations are reported, not repaired.
    """
    rng = np.random.default_rng(seed)
    h = grid.h
    if tol_compat is None:
        tol_compat = 10.0 * h
    pb, _, _, _ = grid.band_geometry()
    compat = float(np.max(np.abs(data.u0(pb) - data.phi(0.0, pb)))) if pb.size else 0.0
    T = data.horizon if np.isfinite(data.horizon) else 1.0
    ts = rng.random(n_spots) * T
    idx = rng.integers(0, grid.n_nodes, n_spots)
    fmin = np.inf
    mono_defect = 0.0
    for t, i in zip(ts, idx):
        p = grid.pos[i][None, :]
        fmin = min(fmin, float(data.f(t, p)[0]))
        r1, r2 = np.sort(rng.standard_normal(2) * 2.0)
        d = float(data.F(t, p, np.array([r2]))[0] - data.F(t, p, np.array([r1]))[0])
        mono_defect = max(mono_defect, -d)
    return {
        "compat_defect": compat,
        "compat_ok": compat <= tol_compat,
        "f_min_sampled": fmin,
        "f_nonneg": fmin >= 0.0,
        "F_monotone_defect": mono_defect,
        "F_monotone_ok": mono_defect <= 1e-9,
    }


def const_field(c: float):
    """Spatial sampler returning the constant c."""

    def fn(pts):
        return np.full(np.atleast_2d(pts).shape[0], float(c))

    return fn


def const_tfield(c: float):
    """Space-time sampler returning the constant c."""

    def fn(t, pts):
        return np.full(np.atleast_2d(pts).shape[0], float(c))

    return fn
