"""Built-in problem corpus: manufactured flows with closed-form solutions,
Holder ramp data, the t dV density example, and the kinked-log admissibility
example with its shifted witness family.

Every entry returns (ProblemData, extras) where extras carries the exact
solution or reference objects used by the harness.  All entries live on the
unit ball.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .admissibility import AdmissibilityWitness
from .domain import ProblemData, abs2, ball, sample_on_grid
from .elliptic import EllipticProblem
from .scheme import Scheme


def _const(c):
    def fn(t, pts):
        return np.full(np.atleast_2d(pts).shape[0], float(c))
    return fn


def manufactured_linear(n: int = 1) -> tuple:
    """Exact solution u = |z|^2 + t: f = e^{-1}, F = 0, phi = 1 + t."""
    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=_const(math.exp(-1.0)),
        phi=lambda t, pts: abs2(pts) + t,
        u0=lambda pts: abs2(pts),
        horizon=1.0,
        name=f"manufactured_linear_n{n}",
    )
    extras = {
        "dom": ball(n),
        "exact": lambda t, pts: abs2(pts) + t,
        "time_quotient": 1.0,
    }
    return data, extras


def stationary(n: int = 1) -> tuple:
    """Steady state u = |z|^2: f = 1, F = 0, phi = 1."""
    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=_const(1.0),
        phi=lambda t, pts: abs2(pts),
        u0=lambda pts: abs2(pts),
        horizon=1.0,
        name=f"stationary_n{n}",
    )
    extras = {"dom": ball(n), "exact": lambda t, pts: abs2(pts)}
    return data, extras


def tilted(n: int = 1) -> tuple:
    """Steady state u = |z|^2 + 0.3 Re z_1 (pluriharmonic tilt keeps MA = 1)."""
    def u(t, pts):
        pts = np.atleast_2d(pts)
        return abs2(pts) + 0.3 * pts[:, 0]

    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=_const(1.0),
        phi=u,
        u0=lambda pts: u(0.0, pts),
        horizon=1.0,
        name=f"tilted_n{n}",
    )
    extras = {"dom": ball(n), "exact": u}
    return data, extras


def monotone_forcing(n: int = 1) -> tuple:
    """Steady state u = |z|^2 with F(r) = r and f = e^{-|z|^2}."""
    data = ProblemData(
        F=lambda t, pts, r: np.broadcast_to(
            np.asarray(r, float), (np.atleast_2d(pts).shape[0],)).copy(),
        f=lambda t, pts: np.exp(-abs2(pts)),
        phi=lambda t, pts: abs2(pts),
        u0=lambda pts: abs2(pts),
        horizon=1.0,
        name=f"monotone_forcing_n{n}",
    )
    extras = {"dom": ball(n), "exact": lambda t, pts: abs2(pts)}
    return data, extras


def decaying_to_elliptic(n: int = 1, T: float = 8.0) -> tuple:
    """u(t) = (1 + e^{-t})(|z|^2 - 1) + 1, converging to u_inf = |z|^2.

    The matching density is f = (1 + e^{-t})^n e^{e^{-t}(|z|^2 - 1)}, F = 0,
    phi = 1; the limit problem is MA(u) = dV with phi_inf = 1.
    """
    def f(t, pts):
        a = math.exp(-t)
        return (1.0 + a) ** n * np.exp(a * (abs2(pts) - 1.0))

    def exact(t, pts):
        a = math.exp(-t)
        return (1.0 + a) * (abs2(pts) - 1.0) + 1.0

    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=f,
        phi=_const(1.0),
        u0=lambda pts: 2.0 * abs2(pts) - 1.0,
        horizon=T,
        name=f"decaying_n{n}",
    )
    limit = EllipticProblem(
        F=lambda pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
        phi=lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
        name="radial_limit",
    )
    extras = {"dom": ball(n), "exact": exact, "limit": limit,
              "u_inf": lambda pts: abs2(pts),
              "error_rate": lambda t: math.exp(-t)}
    return data, extras


def holder_ramp(n: int = 1) -> tuple:
    """Holder-1/2 boundary ramp in time, Holder-1/4 boundary layer in space.

    phi(t) = 2^{-1/2} + |t - 1/2|^{1/2} - 2^{-1/2} ramps with exponent 1/2
    around t = 1/2; u0 = 2^{-1/2} - (1 - |z|^2)^{1/4} is psh with a quarter
    power boundary layer; f = 1, F = 0.
    """
    c = 1.0 / math.sqrt(2.0)

    def phi(t, pts):
        m = np.atleast_2d(pts).shape[0]
        return np.full(m, c + math.sqrt(abs(t - 0.5)) - math.sqrt(0.5))

    def u0(pts):
        s = np.clip(1.0 - abs2(pts), 0.0, None)
        return c - s ** 0.25

    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=_const(1.0),
        phi=phi,
        u0=u0,
        horizon=1.0,
        name=f"holder_ramp_n{n}",
    )
    extras = {"dom": ball(n), "alpha": 0.5, "beta": 0.25}
    return data, extras


def linear_density(n: int = 1, T: float = 1.0) -> tuple:
    """Density t dV with phi = 0, u0 = |z|^2 - 1.

    The closed form min{0, u0 - t log t + e^T t} is a supersolution for the
    flow even though (u0, 0 dV) has all its MA mass on {f(0) = 0}.
    """
    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=lambda t, pts: np.full(np.atleast_2d(pts).shape[0], max(t, 0.0)),
        phi=_const(0.0),
        u0=lambda pts: abs2(pts) - 1.0,
        horizon=T,
        name=f"linear_density_n{n}",
    )

    def superbarrier(t, pts):
        tl = t * math.log(t) if t > 0 else 0.0
        base = abs2(pts) - 1.0 - tl + math.exp(T) * t
        return np.minimum(0.0, base)

    extras = {"dom": ball(n), "superbarrier": superbarrier, "T": T}
    return data, extras


def kinked_log(n: int = 1) -> tuple:
    """u0 = log max{|z|^2, 1/2} with density f0 = max{|z|^2 - 1/2, 0}.

    All discrete MA mass of u0 sits on the kink ring where f0 > 0 is tiny,
    yet the pair is witnessed by the shifted family of kinked_log_witness.
    """
    def u0(pts):
        return np.log(np.maximum(abs2(pts), 0.5))

    def f0(pts):
        return np.maximum(abs2(pts) - 0.5, 0.0)

    data = ProblemData(
        F=lambda t, pts, r: np.zeros(np.atleast_2d(pts).shape[0]),
        f=lambda t, pts: f0(pts),
        phi=lambda t, pts: u0(pts),
        u0=u0,
        horizon=1.0,
        name=f"kinked_log_n{n}",
    )
    extras = {"dom": ball(n), "f0": f0}
    return data, extras


def kinked_log_witness(eps: float, scheme: Scheme,
                       m: Optional[int] = None) -> AdmissibilityWitness:
    """Shifted-family witness for kinked_log at gap eps.

    u_m = log max{|z|^2, 1/2 + 1/m} with m = ceil(2 / (e^eps - 1)) satisfies
    u0 <= u_m <= u0 + log(1 + 2/m) <= u0 + eps, and its kink ring sits where
    f0 = 1/m > 0, so C is read off from the measured MA there.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m is None:
        m = int(math.ceil(2.0 / (math.exp(eps) - 1.0)))
    g = scheme.grid
    level = 0.5 + 1.0 / m
    u_m = sample_on_grid(g, lambda pts: np.log(np.maximum(abs2(pts), level)))
    ma = np.maximum(scheme.ma(u_m), 0.0)
    f0 = np.maximum(abs2(g.pos[g.interior]) - 0.5, 0.0)
    tol = 10.0 * scheme.h
    active = ma > tol
    if active.any():
        if np.min(f0[active]) <= 0.0:
            raise ValueError(f"1/m = {1.0/m:g} is under the grid resolution")
        C = float(np.max(np.log(ma[active] / f0[active])))
        C = max(C, 0.0)
    else:
        C = 0.0
    return AdmissibilityWitness(eps=eps, u_eps=u_m, C_eps=C)


CORPUS = {
    "manufactured_linear": manufactured_linear,
    "stationary": stationary,
    "tilted": tilted,
    "monotone_forcing": monotone_forcing,
    "decaying_to_elliptic": decaying_to_elliptic,
    "holder_ramp": holder_ramp,
    "linear_density": linear_density,
    "kinked_log": kinked_log,
}


def get_problem(name: str, n: int = 1) -> tuple:
    if name not in CORPUS:
        raise KeyError(f"unknown problem {name!r}; have {sorted(CORPUS)}")
    return CORPUS[name](n)
