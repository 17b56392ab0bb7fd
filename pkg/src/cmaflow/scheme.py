"""Shared discretization bundle: grid + frames + operator parameters."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import DomainSpec, GridFunction, SpaceGrid, build_grid
from .operator import FrameSet, frame_hessians, is_discretely_psh, ma_field, make_frames


@dataclass
class Scheme:
    """Everything needed to evaluate the discrete MA operator on one grid."""

    grid: SpaceGrid
    frames: FrameSet
    penalty: float = 1.0
    eps_ma: float = 1e-12
    eps_f: float = 0.0

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def n(self) -> int:
        return self.grid.dom.n

    def ma(self, u: GridFunction) -> np.ndarray:
        return ma_field(u, self.frames, self.penalty)

    def psh_flags(self, u: GridFunction, tol_psh: float = 1e-9) -> np.ndarray:
        return is_discretely_psh(u, self.frames, tol_psh)

    def sample(self, func, t: Optional[float] = None) -> GridFunction:
        """Sample a spatial callable on all non-Exterior nodes."""
        return GridFunction(self.grid, np.asarray(func(self.grid.pos), float), t)

    def sample_t(self, func, t: float) -> GridFunction:
        """Sample a space-time callable (t, pts) at fixed t."""
        return GridFunction(self.grid, np.asarray(func(t, self.grid.pos), float), t)


def make_scheme(dom: DomainSpec, h: float, K: int = 16, seed: int = 0,
                penalty: float = 1.0, eps_ma: float = 1e-12,
                eps_f: float = 0.0) -> Scheme:
    grid = build_grid(dom, h)
    frames = make_frames(dom.n, K=K, seed=seed)
    return Scheme(grid=grid, frames=frames, penalty=penalty,
                  eps_ma=eps_ma, eps_f=eps_f)
