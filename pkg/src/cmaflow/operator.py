"""Monotone wide-stencil discretization of the complex Monge-Ampere operator.

MA(u) = det(d^2 u / dz_j dz_bar_k), normalized so MA(|z|^2) = 1.  Each unit
direction v in C^n is probed with the 4-point stencil at z +- h v, z +- i h v,
which is exact on Hermitian quadratic forms.  The operator takes the minimum
over a finite set of unitary frames of the product of positive directional
curvatures, with a penalty driving states back to the psh cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import _kernels
from .domain import GridFunction, SpaceGrid, embed

TOL_PSH_DEFAULT = 1e-9


@dataclass(frozen=True)
class ComplexDirection:
    """Unit direction v in C^n with its real lattice offsets for v and i*v."""

    v: np.ndarray  # complex, shape (n,)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex)
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"|v| = {nrm} is not 1")
        object.__setattr__(self, "v", v)

    @property
    def off_v(self) -> np.ndarray:
        return embed(self.v[None, :])[0]

    @property
    def off_iv(self) -> np.ndarray:
        return embed((1j * self.v)[None, :])[0]


@dataclass(frozen=True)
class Frame:
    """n mutually orthogonal unit directions."""

    dirs: tuple

    def __post_init__(self):
        V = np.stack([d.v for d in self.dirs])
        G = V @ V.conj().T
        if np.max(np.abs(G - np.eye(len(self.dirs)))) > 1e-12:
            raise ValueError("frame directions are not orthonormal")


@dataclass(frozen=True)
class FrameSet:
    """Finite unitary frame family; the axis frame is always member 0."""

    frames: tuple
    n: int

    @property
    def K(self) -> int:
        return len(self.frames)

    def all_directions(self):
        for fr in self.frames:
            for d in fr.dirs:
                yield d


def axis_frame(n: int) -> Frame:
    return Frame(tuple(ComplexDirection(np.eye(n, dtype=complex)[j]) for j in range(n)))


def make_frames(n: int, K: int = 16, seed: int = 0) -> FrameSet:
    """Axis frame plus K-1 seeded Haar-ish unitary frames (QR of Gaussians).

    n = 1 always returns the single axis direction: every unit direction spans
    the same complex line, extra frames add nothing.
    """
    if K < 1:
        raise ValueError("K >= 1 required")
    frames = [axis_frame(n)]
    if n > 1:
        rng = np.random.default_rng(seed)
        while len(frames) < K:
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            Q, R = np.linalg.qr(A)
            Q = Q * (np.diag(R) / np.abs(np.diag(R)))  # fix QR phase ambiguity
            frames.append(Frame(tuple(ComplexDirection(Q[:, j]) for j in range(n))))
    return FrameSet(frames=tuple(frames), n=n)


def _probe(grid: SpaceGrid, vals: np.ndarray, offset_units: np.ndarray) -> np.ndarray:
    """Interpolated values at interior_pos + h*offset, using the cached plan."""
    out = None
    for comp, w in grid.gather_plan(offset_units):
        term = w * vals[comp]
        out = term if out is None else out + term
    return out


def _lattice_indices(g: SpaceGrid, d: ComplexDirection):
    """Per-probe compact index arrays when all four probes are lattice exact.

    A probe at +-v, +-i*v lands on a lattice node exactly when its gather
    plan has a single corner of weight 1; only then can the fused kernel be
    used.  Returns (i0, i1, i2, i3) or None, cached on the grid.
    """
    key = ("lattice4", d.off_v.tobytes())
    if key in g._scratch:  # None is a valid cached value
        return g._scratch[key]
    arrs = []
    for off in (d.off_v, -d.off_v, d.off_iv, -d.off_iv):
        plan = g.gather_plan(off)
        if len(plan) != 1 or plan[0][1] != 1.0:
            arrs = None
            break
        arrs.append(plan[0][0])
    result = tuple(arrs) if arrs is not None else None
    g._scratch[key] = result
    return result


def directional_hessian_field(u: GridFunction, d: ComplexDirection,
                              out: Optional[np.ndarray] = None,
                              work: Optional[np.ndarray] = None) -> np.ndarray:
    """D_v u at all Interior nodes: 4-point average curvature over v and i*v.

    `out` and `work` are optional length-n_interior buffers; passing them
    keeps the stepping loop free of large temporaries.
    """
    g = u.grid
    vals = u.values
    if out is None:
        out = np.empty(g.n_interior)
    if _kernels.HAVE_NUMBA:
        lat = _lattice_indices(g, d)
        if lat is not None:
            _kernels.hess4(vals, lat[0], lat[1], lat[2], lat[3], g.interior,
                           1.0 / (4.0 * g.h * g.h), out)
            return out
    if work is None:
        work = np.empty(g.n_interior)
    first = True
    for off in (d.off_v, -d.off_v, d.off_iv, -d.off_iv):
        for comp, w in g.gather_plan(off):
            np.take(vals, comp, out=work)
            if w != 1.0:
                work *= w
            if first:
                out[:] = work
                first = False
            else:
                out += work
    np.take(vals, g.interior, out=work)
    work *= 4.0
    out -= work
    out /= 4.0 * g.h * g.h
    return out


def directional_hessian(u: GridFunction, node: int, d: ComplexDirection) -> float:
    """D_v u at one Interior node (compact index)."""
    g = u.grid
    field = directional_hessian_field(u, d)
    pos_in_interior = np.searchsorted(g.interior, node)
    if pos_in_interior >= g.interior.size or g.interior[pos_in_interior] != node:
        raise ValueError(f"node {node} is not Interior")
    return float(field[pos_in_interior])


def frame_hessians(u: GridFunction, frames: FrameSet,
                   out: Optional[np.ndarray] = None,
                   work: Optional[np.ndarray] = None) -> np.ndarray:
    """Directional Hessians, shape (K, n, n_interior)."""
    g = u.grid
    if out is None:
        out = np.empty((frames.K, frames.n, g.n_interior))
    for k, fr in enumerate(frames.frames):
        for j, d in enumerate(fr.dirs):
            directional_hessian_field(u, d, out=out[k, j], work=work)
    return out


def ma_field(u: GridFunction, frames: FrameSet, penalty: float = 1.0) -> np.ndarray:
    """Discrete MA at all Interior nodes.

    min over frames of prod_j max(D_j, 0) - penalty * sum_j max(-D_j, 0).
    Nonnegative exactly when the node is discretely psh over the frame set.
    Scratch buffers are cached on the grid: the stepping loop calls this once
    per step on grids with ~10^6 nodes, and repeated multi-MB temporaries
    dominate the runtime through allocator churn.
    """
    g = u.grid
    key = ("ma_scratch", frames.K, frames.n)
    sc = g._scratch.get(key)
    if sc is None:
        sc = (np.empty((frames.K, frames.n, g.n_interior)),
              np.empty(g.n_interior),
              np.empty((frames.K, frames.n, g.n_interior)))
        g._scratch[key] = sc
    D, work, B = sc
    frame_hessians(u, frames, out=D, work=work)
    if _kernels.HAVE_NUMBA:
        out = np.empty(g.n_interior)
        _kernels.ma_combine(D, float(penalty), out)
        return out
    np.minimum(D, 0.0, out=B)
    neg = -np.sum(B, axis=1)
    np.maximum(D, 0.0, out=B)
    pos = np.prod(B, axis=1)
    pos -= penalty * neg
    return np.min(pos, axis=0)


def ma_apply(u: GridFunction, node: int, frames: FrameSet,
             penalty: float = 1.0) -> float:
    """Discrete MA at a single Interior node (compact index)."""
    g = u.grid
    pos_in_interior = np.searchsorted(g.interior, node)
    if pos_in_interior >= g.interior.size or g.interior[pos_in_interior] != node:
        raise ValueError(f"node {node} is not Interior")
    return float(ma_field(u, frames, penalty)[pos_in_interior])


def is_discretely_psh(u: GridFunction, frames: FrameSet,
                      tol_psh: float = TOL_PSH_DEFAULT) -> np.ndarray:
    """Per-Interior-node flag: every directional Hessian >= -tol_psh."""
    D = frame_hessians(u, frames)
    return np.all(D >= -tol_psh, axis=(0, 1))
